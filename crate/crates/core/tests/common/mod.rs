#![allow(dead_code)]

use bisimkit::hml::HmlFormula;
use bisimkit::semantics::Lts;
use bisimkit::terms::{Action, Environment, ProcessTerm};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub use rand::SeedableRng;

pub type TestRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TestRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub const NAMES: [&str; 4] = ["a", "b", "c", "d"];

pub fn act(name: &str) -> Action {
    Action::from_label(name).unwrap()
}

pub fn lts(n: usize, ts: &[(usize, &str, usize)]) -> Lts {
    Lts::new(n, ts.iter().map(|(s, a, t)| (*s, act(a), *t))).unwrap()
}

#[derive(Clone, Copy, Debug)]
pub struct Shape {
    pub max_states: usize,
    pub max_actions: usize,
    /// Upper bound of the tau probability per transition.
    pub max_tau: f64,
    pub max_out: usize,
}

impl Default for Shape {
    fn default() -> Self {
        Shape { max_states: 30, max_actions: 4, max_tau: 0.3, max_out: 3 }
    }
}

fn random_action(rng: &mut TestRng, actions: usize, tau: f64) -> Action {
    if rng.gen_bool(tau) {
        Action::Tau
    } else {
        act(NAMES[rng.gen_range(0..actions)])
    }
}

/// A random LTS where every state is reachable from state 0.
pub fn random_lts(rng: &mut TestRng, shape: Shape) -> Lts {
    let n = rng.gen_range(1..=shape.max_states);
    let actions = rng.gen_range(1..=shape.max_actions);
    let tau = rng.gen_range(0.0..=shape.max_tau);
    let mut ts = Vec::new();
    // a random spanning tree keeps every state reachable
    for s in 1..n {
        let parent = rng.gen_range(0..s);
        ts.push((parent, random_action(rng, actions, tau), s));
    }
    for s in 0..n {
        for _ in 0..rng.gen_range(0..=shape.max_out) {
            ts.push((s, random_action(rng, actions, tau), rng.gen_range(0..n)));
        }
    }
    Lts::new(n, ts).unwrap()
}

fn transitions(l: &Lts) -> Vec<(usize, Action, usize)> {
    l.transitions().map(|t| (t.source, t.action.clone(), t.target)).collect()
}

/// Renumbers all states except 0.
pub fn shuffle_states(rng: &mut TestRng, l: &Lts) -> Lts {
    let n = l.state_count();
    let mut perm: Vec<usize> = (1..n).collect();
    perm.shuffle(rng);
    let map = |s: usize| if s == 0 { 0 } else { perm[s - 1] };
    Lts::new(n, transitions(l).into_iter().map(|(s, a, t)| (map(s), a, map(t)))).unwrap()
}

/// A strongly bisimilar copy: some states are duplicated and incoming
/// transitions are spread over the copies, then states are renumbered.
pub fn strong_clone(rng: &mut TestRng, l: &Lts) -> Lts {
    let n = l.state_count();
    let extra = rng.gen_range(0..=n.min(8));
    let originals: Vec<usize> = (0..extra).map(|_| rng.gen_range(0..n)).collect();
    let mut ts = Vec::new();
    for (s, a, t) in transitions(l) {
        let copies: Vec<usize> = std::iter::once(t).chain((0..extra).filter(|&i| originals[i] == t).map(|i| n + i)).collect();
        let target = *copies.choose(rng).unwrap();
        for src in std::iter::once(s).chain((0..extra).filter(|&i| originals[i] == s).map(|i| n + i)) {
            ts.push((src, a.clone(), target));
        }
    }
    shuffle_states(rng, &Lts::new(n + extra, ts).unwrap())
}

/// A weakly bisimilar copy: some transitions `s -a-> t` are split into
/// `s -a-> u -tau-> t` with a fresh `u`.
pub fn weak_clone(rng: &mut TestRng, l: &Lts) -> Lts {
    let mut n = l.state_count();
    let mut ts = Vec::new();
    for (s, a, t) in transitions(l) {
        if rng.gen_bool(0.3) {
            ts.push((s, a, n));
            ts.push((n, Action::Tau, t));
            n += 1;
        } else {
            ts.push((s, a, t));
        }
    }
    shuffle_states(rng, &Lts::new(n, ts).unwrap())
}

/// A clone with one transition relabelled, retargeted, added or removed.
pub fn perturb(rng: &mut TestRng, l: &Lts) -> Lts {
    let base = strong_clone(rng, l);
    let n = base.state_count();
    let mut ts = transitions(&base);
    match rng.gen_range(0..4) {
        0 if !ts.is_empty() => {
            let i = rng.gen_range(0..ts.len());
            ts[i].1 = random_action(rng, 4, 0.3);
        }
        1 if !ts.is_empty() => {
            let i = rng.gen_range(0..ts.len());
            ts[i].2 = rng.gen_range(0..n);
        }
        2 if !ts.is_empty() => {
            let i = rng.gen_range(0..ts.len());
            ts.remove(i);
        }
        _ => ts.push((rng.gen_range(0..n), random_action(rng, 4, 0.3), rng.gen_range(0..n))),
    }
    Lts::new(n, ts).unwrap()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PairMode {
    Independent,
    StrongClone,
    WeakClone,
    Perturbed,
}

/// Pair number `i` of a deterministic sequence cycling through all modes.
pub fn random_pair(rng: &mut TestRng, i: usize) -> (Lts, Lts, PairMode) {
    let mode = [PairMode::Independent, PairMode::StrongClone, PairMode::WeakClone, PairMode::Perturbed][i % 4];
    match mode {
        PairMode::Independent => {
            // small shapes so that independent pairs are sometimes equivalent
            let shape = Shape { max_states: rng.gen_range(2..=30), max_actions: rng.gen_range(1..=4), ..Shape::default() };
            let small = Shape { max_states: 4, max_actions: 2, max_out: 2, ..shape };
            let pick = if rng.gen_bool(0.5) { small } else { shape };
            (random_lts(rng, pick), random_lts(rng, pick), mode)
        }
        PairMode::StrongClone => {
            let a = random_lts(rng, Shape { max_states: 22, ..Shape::default() });
            let b = strong_clone(rng, &a);
            (a, b, mode)
        }
        PairMode::WeakClone => {
            let a = random_lts(rng, Shape { max_states: 18, ..Shape::default() });
            let b = weak_clone(rng, &a);
            let b = if b.state_count() > 30 { strong_clone(rng, &a) } else { b };
            (a, b, mode)
        }
        PairMode::Perturbed => {
            let a = random_lts(rng, Shape { max_states: 22, ..Shape::default() });
            let b = perturb(rng, &a);
            (a, b, mode)
        }
    }
}

/// Definitions `{prefix}{i}` describing `l`, one per state.
pub fn lts_definitions(l: &Lts, prefix: &str) -> Vec<(String, ProcessTerm)> {
    (0..l.state_count())
        .map(|s| {
            let alts: Vec<ProcessTerm> = l
                .outgoing(s)
                .map(|(a, t)| ProcessTerm::prefix(a.clone(), ProcessTerm::constant(format!("{prefix}{t}"))))
                .collect();
            (format!("{prefix}{s}"), ProcessTerm::choice_of(alts))
        })
        .collect()
}

pub fn lts_environment(l: &Lts, prefix: &str) -> Environment {
    Environment::from_defs(lts_definitions(l, prefix), format!("{prefix}0"))
}

/// A random one-hole context built from prefix, choice and parallel.
#[derive(Clone, Debug)]
pub enum Context {
    Hole,
    Prefix(Action, Box<Context>),
    ChoiceLeft(Box<Context>, ProcessTerm),
    ChoiceRight(ProcessTerm, Box<Context>),
    ParLeft(Box<Context>, Vec<String>, ProcessTerm),
    ParRight(ProcessTerm, Vec<String>, Box<Context>),
}

impl Context {
    pub fn random(rng: &mut TestRng, depth: usize, other: &ProcessTerm) -> Context {
        if depth == 0 {
            return Context::Hole;
        }
        let inner = Box::new(Context::random(rng, depth - 1, other));
        let sync: Vec<String> = NAMES.iter().filter(|_| rng.gen_bool(0.4)).map(|s| s.to_string()).collect();
        match rng.gen_range(0..5) {
            0 => Context::Prefix(random_action(rng, 4, 0.2), inner),
            1 => Context::ChoiceLeft(inner, other.clone()),
            2 => Context::ChoiceRight(other.clone(), inner),
            3 => Context::ParLeft(inner, sync, other.clone()),
            _ => Context::ParRight(other.clone(), sync, inner),
        }
    }

    pub fn fill(&self, hole: &ProcessTerm) -> ProcessTerm {
        match self {
            Context::Hole => hole.clone(),
            Context::Prefix(a, c) => ProcessTerm::prefix(a.clone(), c.fill(hole)),
            Context::ChoiceLeft(c, r) => ProcessTerm::choice(c.fill(hole), r.clone()),
            Context::ChoiceRight(r, c) => ProcessTerm::choice(r.clone(), c.fill(hole)),
            Context::ParLeft(c, s, r) => ProcessTerm::parallel(c.fill(hole), s.clone(), r.clone()),
            Context::ParRight(r, s, c) => ProcessTerm::parallel(r.clone(), s.clone(), c.fill(hole)),
        }
    }
}

/// Environment whose root is `context[process]`; `process` and the
/// context's other operand are given by their definitions.
pub fn in_context(
    context: &Context,
    process: &[(String, ProcessTerm)],
    other: &[(String, ProcessTerm)],
) -> Environment {
    let hole = ProcessTerm::constant(process[0].0.clone());
    let mut defs = vec![("Root".to_string(), context.fill(&hole))];
    defs.extend(process.iter().cloned());
    defs.extend(other.iter().cloned());
    Environment::from_defs(defs, "Root")
}

/// A random HML formula of modal depth at most `depth`.
pub fn random_formula(rng: &mut TestRng, depth: usize, weak: bool) -> HmlFormula {
    let leaf = depth == 0 || rng.gen_bool(0.25);
    if leaf {
        return if rng.gen_bool(0.5) { HmlFormula::True } else { HmlFormula::False };
    }
    let a = random_action(rng, 3, 0.2);
    match rng.gen_range(0..if weak { 7 } else { 5 }) {
        0 => HmlFormula::not(random_formula(rng, depth, weak)),
        1 => HmlFormula::and(random_formula(rng, depth - 1, weak), random_formula(rng, depth - 1, weak)),
        2 => HmlFormula::or(random_formula(rng, depth - 1, weak), random_formula(rng, depth - 1, weak)),
        3 => HmlFormula::diamond(a, random_formula(rng, depth - 1, weak)),
        4 => HmlFormula::boxed(a, random_formula(rng, depth - 1, weak)),
        5 => HmlFormula::weak_diamond(a, random_formula(rng, depth - 1, weak)),
        _ => HmlFormula::weak_box(a, random_formula(rng, depth - 1, weak)),
    }
}
