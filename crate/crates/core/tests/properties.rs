mod common;

use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

use bisimkit::equivalence::{
    check_equivalence, minimize_lts, naive_equivalence_oracle, partition_for, saturate_weak, Kind,
};
use bisimkit::hml::{HmlFormula, ModelChecker};
use bisimkit::parser::{parse_formula, parse_model_file, parse_term};
use bisimkit::semantics::{build_lts, step_transitions, Folder, Lts, SemanticsError};
use bisimkit::terms::{validate_environment, Action, Environment, ProcessTerm};
use common::*;
use proptest::prelude::*;

fn action() -> impl Strategy<Value = Action> {
    prop_oneof![Just("a"), Just("b"), Just("c"), Just("tau")].prop_map(act)
}

fn name_set() -> impl Strategy<Value = BTreeSet<String>> {
    proptest::collection::btree_set(prop_oneof![Just("a"), Just("b"), Just("c")].prop_map(String::from), 0..3)
}

fn term() -> impl Strategy<Value = ProcessTerm> {
    let leaf = prop_oneof![
        Just(ProcessTerm::Nil),
        prop_oneof![Just("P"), Just("Q"), Just("R")].prop_map(ProcessTerm::constant),
    ];
    leaf.prop_recursive(5, 40, 3, |inner| {
        prop_oneof![
            (action(), inner.clone()).prop_map(|(a, t)| ProcessTerm::Prefix(a, Arc::new(t))),
            (inner.clone(), inner.clone()).prop_map(|(l, r)| ProcessTerm::Choice(Arc::new(l), Arc::new(r))),
            (inner.clone(), name_set(), inner.clone())
                .prop_map(|(l, s, r)| ProcessTerm::Parallel(Arc::new(l), s, Arc::new(r))),
            (inner, name_set()).prop_map(|(t, s)| ProcessTerm::Hide(Arc::new(t), s)),
        ]
    })
}

fn formula() -> impl Strategy<Value = HmlFormula> {
    let leaf = prop_oneof![Just(HmlFormula::True), Just(HmlFormula::False)];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(HmlFormula::not),
            (inner.clone(), inner.clone()).prop_map(|(f, g)| HmlFormula::and(f, g)),
            (inner.clone(), inner.clone()).prop_map(|(f, g)| HmlFormula::or(f, g)),
            (action(), inner.clone()).prop_map(|(a, f)| HmlFormula::diamond(a, f)),
            (action(), inner.clone()).prop_map(|(a, f)| HmlFormula::boxed(a, f)),
            (action(), inner.clone()).prop_map(|(a, f)| HmlFormula::weak_diamond(a, f)),
            (action(), inner).prop_map(|(a, f)| HmlFormula::weak_box(a, f)),
        ]
    })
}

/// Formulas using only strong modalities, or only weak ones.
fn modal_formula(weak: bool) -> impl Strategy<Value = HmlFormula> {
    let leaf = prop_oneof![Just(HmlFormula::True), Just(HmlFormula::False)];
    leaf.prop_recursive(4, 24, 2, move |inner| {
        let dia = if weak { HmlFormula::weak_diamond } else { HmlFormula::diamond };
        let boxed = if weak { HmlFormula::weak_box } else { HmlFormula::boxed };
        prop_oneof![
            inner.clone().prop_map(HmlFormula::not),
            (inner.clone(), inner.clone()).prop_map(|(f, g)| HmlFormula::and(f, g)),
            (inner.clone(), inner.clone()).prop_map(|(f, g)| HmlFormula::or(f, g)),
            (action(), inner.clone()).prop_map(move |(a, f)| dia(a, f)),
            (action(), inner).prop_map(move |(a, f)| boxed(a, f)),
        ]
    })
}

fn seeded_lts(seed: u64, max_states: usize) -> Lts {
    random_lts(&mut rng(seed), Shape { max_states, ..Shape::default() })
}

/// A guarded model with parallel composition and hiding over the given
/// random LTSs, so that state spaces are products.
fn composed_environment(seed: u64) -> Environment {
    let mut r = rng(seed);
    let a = random_lts(&mut r, Shape { max_states: 6, max_actions: 3, ..Shape::default() });
    let b = random_lts(&mut r, Shape { max_states: 6, max_actions: 3, ..Shape::default() });
    let mut defs = vec![(
        "Sys".to_string(),
        ProcessTerm::hide(ProcessTerm::parallel(ProcessTerm::constant("A0"), ["a"], ProcessTerm::constant("B0")), ["b"]),
    )];
    defs.extend(lts_definitions(&a, "A"));
    defs.extend(lts_definitions(&b, "B"));
    Environment::from_defs(defs, "Sys")
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn term_render_parse_round_trip(t in term()) {
        let text = t.to_string();
        prop_assert_eq!(parse_term(&text).unwrap(), t, "{}", text);
    }

    #[test]
    fn formula_render_parse_round_trip(f in formula()) {
        let text = f.to_string();
        prop_assert_eq!(parse_formula(&text).unwrap(), f, "{}", text);
    }

    #[test]
    fn structural_equality_is_an_equivalence(x in term(), y in term(), z in term()) {
        prop_assert_eq!(&x, &x.clone());
        prop_assert_eq!(x == y, y == x);
        if x == y && y == z {
            prop_assert_eq!(&x, &z);
        }
        // equal terms render identically, and equal renderings parse to equal terms
        prop_assert_eq!(x == y, x.to_string() == y.to_string());
    }

    #[test]
    fn diagnostics_point_inside_the_input(seed in any::<u64>(), cut in 0usize..200, insert in "[ ;=.+(){}\\[\\]|<>a-z0#]{0,3}") {
        let env = composed_environment(seed);
        let text = env.render();
        let chars: Vec<char> = text.chars().collect();
        let at = cut.min(chars.len());
        let mutated: String = chars[..at].iter().chain(insert.chars().collect::<Vec<_>>().iter()).chain(chars[at..].iter()).collect();
        if let Err(d) = parse_model_file(&mutated) {
            let lines: Vec<&str> = mutated.split('\n').collect();
            prop_assert!(d.line >= 1 && d.line <= lines.len(), "{} in {:?}", d, mutated);
            prop_assert!(d.column >= 1 && d.column <= lines[d.line - 1].chars().count() + 1, "{} in {:?}", d, mutated);
        }
    }

    #[test]
    fn build_is_deterministic(seed in any::<u64>()) {
        let env = composed_environment(seed);
        prop_assert!(validate_environment(&env).is_empty());
        let first = build_lts(&env, 10_000).unwrap();
        let second = build_lts(&env, 10_000).unwrap();
        prop_assert_eq!(&first, &second);
        // parsing the rendered model yields the same LTS
        let reparsed = parse_model_file(&env.render()).unwrap();
        prop_assert_eq!(build_lts(&reparsed.env, 10_000).unwrap(), first);
    }

    #[test]
    fn state_bound_is_monotone(seed in any::<u64>()) {
        let env = composed_environment(seed);
        let n = build_lts(&env, 10_000).unwrap().state_count();
        prop_assert_eq!(build_lts(&env, n).unwrap().state_count(), n);
        prop_assert_eq!(build_lts(&env, n + 5).unwrap().state_count(), n);
        if n > 1 {
            let err = build_lts(&env, n - 1).unwrap_err();
            let bounded = matches!(err, SemanticsError::StateBoundExceeded { max_states, .. } if max_states == n - 1);
            prop_assert!(bounded, "{}", err);
        }
    }

    #[test]
    fn every_state_has_exactly_its_folded_derivatives(seed in any::<u64>()) {
        let env = composed_environment(seed);
        let lts = build_lts(&env, 10_000).unwrap();
        let terms = lts.terms().unwrap();
        let index: HashMap<&ProcessTerm, usize> = terms.iter().enumerate().map(|(i, t)| (t, i)).collect();
        prop_assert_eq!(index.len(), terms.len(), "states are distinct terms");
        let folder = Folder::new(&env);
        for (s, t) in terms.iter().enumerate() {
            let mut expected: Vec<(Action, usize)> = step_transitions(t, &env)
                .unwrap()
                .into_iter()
                .map(|(a, d)| (a, index[&folder.fold(&d)]))
                .collect();
            expected.sort();
            expected.dedup();
            let actual: Vec<(Action, usize)> = lts.outgoing(s).map(|(a, t)| (a.clone(), t)).collect();
            prop_assert_eq!(actual, expected);
        }
    }

    #[test]
    fn negation_and_modal_duality(seed in any::<u64>(), f in formula(), g in formula(), a in action()) {
        let lts = seeded_lts(seed, 12);
        let mut mc = ModelChecker::new(&lts);
        for s in 0..lts.state_count() {
            let holds = mc.holds(s, &f).unwrap();
            prop_assert_eq!(mc.holds(s, &HmlFormula::not(f.clone())).unwrap(), !holds);
            let dia = mc.holds(s, &HmlFormula::diamond(a.clone(), f.clone())).unwrap();
            let dual = mc.holds(s, &HmlFormula::not(HmlFormula::boxed(a.clone(), HmlFormula::not(f.clone())))).unwrap();
            prop_assert_eq!(dia, dual);
            let wdia = mc.holds(s, &HmlFormula::weak_diamond(a.clone(), f.clone())).unwrap();
            let wdual = mc.holds(s, &HmlFormula::not(HmlFormula::weak_box(a.clone(), HmlFormula::not(f.clone())))).unwrap();
            prop_assert_eq!(wdia, wdual);
            // strong diamond implies weak diamond
            prop_assert!(!dia || wdia);
            let both = mc.holds(s, &HmlFormula::and(f.clone(), g.clone())).unwrap();
            let either = mc.holds(s, &HmlFormula::or(f.clone(), g.clone())).unwrap();
            let gh = mc.holds(s, &g).unwrap();
            prop_assert_eq!(both, holds && gh);
            prop_assert_eq!(either, holds || gh);
        }
    }

    #[test]
    fn modalities_are_monotone(seed in any::<u64>(), f in formula(), g in formula(), a in action()) {
        let lts = seeded_lts(seed, 12);
        let mut mc = ModelChecker::new(&lts);
        let weaker = HmlFormula::or(f.clone(), g);
        for s in 0..lts.state_count() {
            for wrap in [HmlFormula::diamond, HmlFormula::boxed, HmlFormula::weak_diamond, HmlFormula::weak_box] {
                if mc.holds(s, &wrap(a.clone(), f.clone())).unwrap() {
                    prop_assert!(mc.holds(s, &wrap(a.clone(), weaker.clone())).unwrap());
                }
            }
        }
    }

    #[test]
    fn equivalence_laws(seed in any::<u64>(), i in 0usize..4) {
        let mut r = rng(seed);
        let (a, b, _) = random_pair(&mut r, i);
        let c = strong_clone(&mut r, &b);
        for kind in [Kind::Strong, Kind::Weak] {
            prop_assert!(check_equivalence(&a, &a, kind).equivalent());
            let ab = check_equivalence(&a, &b, kind).equivalent();
            prop_assert_eq!(ab, check_equivalence(&b, &a, kind).equivalent());
            // c ~ b, so a relates to c exactly when it relates to b
            prop_assert_eq!(ab, check_equivalence(&a, &c, kind).equivalent());
        }
        if check_equivalence(&a, &b, Kind::Strong).equivalent() {
            prop_assert!(check_equivalence(&a, &b, Kind::Weak).equivalent());
        }
    }

    #[test]
    fn witness_partition_is_a_bisimulation(seed in any::<u64>(), i in 0usize..4) {
        let (a, b, _) = random_pair(&mut rng(seed), i);
        for kind in [Kind::Strong, Kind::Weak] {
            let v = check_equivalence(&a, &b, kind);
            let (union, _) = a.disjoint_union(&b);
            let graph = if kind == Kind::Weak { saturate_weak(&union) } else { union };
            let p = partition_for(&graph, Kind::Strong);
            let signature = |s: usize| -> BTreeSet<(Action, usize)> {
                graph.outgoing(s).map(|(act, t)| (act.clone(), p.block_of(t))).collect()
            };
            for block in p.blocks() {
                let first = signature(block[0]);
                for &s in &block[1..] {
                    prop_assert_eq!(&signature(s), &first);
                }
            }
            if let Some(w) = v.witness_partition() {
                prop_assert_eq!(w.blocks(), p.blocks());
                prop_assert!(w.same_block(0, v.right_offset));
            }
        }
    }

    #[test]
    fn quotient_is_equivalent_and_minimal(seed in any::<u64>()) {
        let lts = seeded_lts(seed, 30);
        for kind in [Kind::Strong, Kind::Weak] {
            let q = minimize_lts(&lts, kind);
            prop_assert!(check_equivalence(&lts, &q, kind).equivalent());
            prop_assert!(partition_for(&q, kind).is_discrete());
            prop_assert_eq!(naive_equivalence_oracle(&lts, &q, kind), Ok(true));
        }
    }

    #[test]
    fn bisimilar_roots_satisfy_the_same_formulas(seed in any::<u64>(), f in modal_formula(false), g in modal_formula(true)) {
        let mut r = rng(seed);
        let a = random_lts(&mut r, Shape { max_states: 12, ..Shape::default() });
        let strong = strong_clone(&mut r, &a);
        let weak = weak_clone(&mut r, &a);
        prop_assert_eq!(
            ModelChecker::new(&a).holds(0, &f).unwrap(),
            ModelChecker::new(&strong).holds(0, &f).unwrap()
        );
        prop_assert_eq!(
            ModelChecker::new(&a).holds(0, &g).unwrap(),
            ModelChecker::new(&weak).holds(0, &g).unwrap()
        );
    }
}
