use bisimkit::casestudies::{
    build_double_spend, build_offline_chain, build_producer_consumer, build_torn_transaction, ChainVariant, CheckKind,
    Corpus, Style,
};
use bisimkit::equivalence::{check_equivalence, naive_equivalence_oracle, Kind};
use bisimkit::hml::evaluate_formula;
use bisimkit::parser::parse_formula;
use bisimkit::semantics::{build_lts, reachable_action_set, Lts, DEFAULT_MAX_STATES};
use bisimkit::terms::Action;

fn model_lts(corpus: &Corpus, name: &str) -> Lts {
    build_lts(&corpus.model(name).unwrap().env, DEFAULT_MAX_STATES).unwrap()
}

fn act(name: &str) -> Action {
    Action::observable(name).unwrap()
}

#[test]
fn every_corpus_model_builds_under_the_default_bound() {
    let corpus = Corpus::embedded();
    for (name, model) in corpus.models() {
        let lts = build_lts(&model.env, DEFAULT_MAX_STATES).unwrap();
        assert!(lts.state_count() > 0, "{name}");
    }
}

#[test]
fn every_declared_check_is_confirmed_by_the_oracle() {
    // Equivalence checks are re-decided by the naive fixpoint; formula and
    // reachability checks by direct evaluation.
    let corpus = Corpus::embedded();
    for case in corpus.cases() {
        for check in &case.checks {
            let lts = |r| build_lts(&corpus.environment(r).unwrap(), DEFAULT_MAX_STATES).unwrap();
            let actual = match &check.kind {
                CheckKind::Equivalence { left, right, kind } => {
                    naive_equivalence_oracle(&lts(left), &lts(right), *kind).unwrap()
                }
                CheckKind::Formula { model, formula } => evaluate_formula(&lts(model), 0, formula).unwrap().holds,
                CheckKind::Reachability { model, action } => {
                    let l = lts(model);
                    let mut reached = vec![false; l.state_count()];
                    reached[0] = true;
                    let mut changed = true;
                    while changed {
                        changed = false;
                        for t in l.transitions() {
                            if reached[t.source] && !reached[t.target] {
                                reached[t.target] = true;
                                changed = true;
                            }
                        }
                    }
                    let found = l.transitions().any(|t| reached[t.source] && t.action == action);
                    found
                }
            };
            assert_eq!(actual, check.expected, "{}", check.name);
        }
    }
}

#[test]
fn chain1_attributes_the_forgery() {
    let case = build_offline_chain(ChainVariant::Chain1);
    let lts = build_lts(&case.model.env, DEFAULT_MAX_STATES).unwrap();
    assert!(!lts.has_cycle());
    let actions = reachable_action_set(&lts, 0).unwrap();
    assert!(actions.contains(&act("blame_a")));
    assert!(actions.contains(&act("forge_a")));
    assert!(!actions.contains(&act("unresolved")));
    assert!(case.checks.iter().any(|c| matches!(&c.kind, CheckKind::Reachability { action, .. } if action.name() == "blame_a") && c.expected));
}

#[test]
fn chain2_cannot_attribute() {
    let case = build_offline_chain(ChainVariant::Chain2);
    let lts = build_lts(&case.model.env, DEFAULT_MAX_STATES).unwrap();
    assert!(!lts.has_cycle());
    let actions = reachable_action_set(&lts, 0).unwrap();
    assert!(!actions.contains(&act("blame_a")));
    assert!(!actions.contains(&act("blame_b")));
    assert!(actions.contains(&act("unresolved")));
    assert!(actions.contains(&act("forge_a")) && actions.contains(&act("forge_b")));
}

#[test]
fn double_spend_replay_is_rejected() {
    let case = build_double_spend();
    let lts = build_lts(&case.model.env, DEFAULT_MAX_STATES).unwrap();
    let f = parse_formula("[recv_t1][recv_t1]([accept] ff and <reject> tt)").unwrap();
    assert!(evaluate_formula(&lts, 0, &f).unwrap().holds);
    // sanity: a single receipt can be accepted
    let g = parse_formula("<recv_t1><accept> tt").unwrap();
    assert!(evaluate_formula(&lts, 0, &g).unwrap().holds);
}

#[test]
fn broken_wallet_is_caught_on_accept_or_reject() {
    let corpus = Corpus::embedded();
    let broken = model_lts(&corpus, "wallet_broken");
    let spec = model_lts(&corpus, "wallet_spec");
    let v = check_equivalence(&broken, &spec, Kind::Weak);
    let text = v.distinguishing().unwrap().to_string();
    assert!(text.contains("accept") || text.contains("reject"), "{text}");
    let wallet = build_lts(&corpus.model("double_spend").unwrap().env.with_root("Wallet"), DEFAULT_MAX_STATES).unwrap();
    assert!(check_equivalence(&wallet, &spec, Kind::Weak).equivalent());
    // hiding commit and reset makes the wallet differ from the spec strongly
    assert!(!check_equivalence(&wallet, &spec, Kind::Strong).equivalent());
}

#[test]
fn torn_transaction_settles_only_with_recovery() {
    let case = build_torn_transaction();
    let corpus = Corpus::embedded();
    let torn = build_lts(&case.model.env, DEFAULT_MAX_STATES).unwrap();
    let spec = model_lts(&corpus, "torn_spec");
    assert!(check_equivalence(&torn, &spec, Kind::Weak).equivalent());
    let lossy = model_lts(&corpus, "torn_norecovery");
    let v = check_equivalence(&lossy, &spec, Kind::Weak);
    assert!(!v.equivalent());
    let settles = &corpus.model("torn").unwrap().property("settles").unwrap().formula;
    assert!(evaluate_formula(&torn, 0, settles).unwrap().holds);
    assert!(!evaluate_formula(&lossy, 0, settles).unwrap().holds);
}

#[test]
fn capacity_three_styles_agree() {
    let lts = |style| build_lts(&build_producer_consumer(3, 1, 1, style).unwrap().env, DEFAULT_MAX_STATES).unwrap();
    let (spec, conc, pipe) = (lts(Style::Spec), lts(Style::Concurrent), lts(Style::Pipeline));
    assert_eq!(spec.state_count(), 4);
    assert_eq!(conc.state_count(), 8);
    assert!(check_equivalence(&conc, &spec, Kind::Strong).equivalent());
    assert_eq!(naive_equivalence_oracle(&conc, &spec, Kind::Strong), Ok(true));
    assert!(check_equivalence(&pipe, &spec, Kind::Weak).equivalent());
    assert_eq!(naive_equivalence_oracle(&pipe, &spec, Kind::Weak), Ok(true));
}

#[test]
fn several_producers_and_consumers() {
    let lts = |m, k, style| build_lts(&build_producer_consumer(2, m, k, style).unwrap().env, DEFAULT_MAX_STATES).unwrap();
    let spec = lts(1, 1, Style::Spec);
    for (m, k) in [(2, 1), (1, 3), (2, 2)] {
        assert!(check_equivalence(&lts(m, k, Style::Concurrent), &spec, Kind::Strong).equivalent());
        assert!(check_equivalence(&lts(m, k, Style::Pipeline), &spec, Kind::Weak).equivalent());
    }
    let two = build_producer_consumer(2, 2, 1, Style::Concurrent).unwrap();
    assert_eq!(
        two.env.get("PC_conc_2").unwrap().to_string(),
        "Prod ||[] Prod ||[deposit] (Buff ||[] Buff) ||[withdraw] Cons"
    );
}

#[test]
fn pipeline_definitions_for_longer_chains() {
    let m = build_producer_consumer(3, 1, 1, Style::Pipeline).unwrap();
    assert_eq!(
        m.env.render(),
        "PC_pipe_3 = Prod ||[deposit] (Buff_1 ||[pass_1] Buff_2 ||[pass_2] Buff_3) \\ {pass_1,pass_2} ||[withdraw] Cons;\n\
         Prod = deposit . Prod;\n\
         Buff_1 = deposit . pass_1 . Buff_1;\n\
         Buff_2 = pass_1 . pass_2 . Buff_2;\n\
         Buff_3 = pass_2 . withdraw . Buff_3;\n\
         Cons = withdraw . Cons;\n"
    );
}
