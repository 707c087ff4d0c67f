//! Strong and weak bisimilarity by partition refinement.
//!
//! Refinement follows Kanellakis and Smolka: repeatedly split a block by
//! whether its states have an `a`-transition into some splitter block, until
//! no block can be split. Every split is recorded so that two states in
//! different final blocks can be told apart by an HML formula built from the
//! split that first separated them.
//!
//! Weak bisimilarity is strong bisimilarity of the weak-transition LTS
//! produced by [`saturate_weak`].

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use crate::hml::{HmlFormula, ModelChecker};
use crate::semantics::Lts;
use crate::terms::Action;

/// Largest combined state count accepted by [`naive_equivalence_oracle`].
pub const ORACLE_STATE_LIMIT: usize = 1_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Kind {
    Strong,
    Weak,
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Kind::Strong => "strong",
            Kind::Weak => "weak",
        })
    }
}

impl FromStr for Kind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "strong" => Ok(Kind::Strong),
            "weak" => Ok(Kind::Weak),
            other => Err(format!("unknown equivalence kind `{other}` (expected strong or weak)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EquivalenceError {
    #[error("states {0} and {1} are equivalent; no distinguishing formula exists")]
    StatesEquivalent(usize, usize),
    #[error("state {index} out of range (LTS has {count} states)")]
    StateOutOfRange { index: usize, count: usize },
    #[error("oracle limited to {limit} combined states, got {states}")]
    OracleTooLarge { states: usize, limit: usize },
}

/// Disjoint blocks of states covering all states of an LTS.
///
/// Blocks are sorted internally and ordered by their smallest member, so
/// the block holding state 0 (when nonempty) has id 0.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    blocks: Vec<Vec<usize>>,
    block_of: Vec<usize>,
}

impl Partition {
    /// Normalizes `blocks` (sorting members and blocks). Panics on blocks
    /// that are empty, overlap, or leave a state in `0..state_count` uncovered.
    pub fn from_blocks(state_count: usize, mut blocks: Vec<Vec<usize>>) -> Self {
        for block in &mut blocks {
            block.sort_unstable();
        }
        blocks.sort_by_key(|b| b[0]);
        let mut block_of = vec![usize::MAX; state_count];
        for (id, block) in blocks.iter().enumerate() {
            for &s in block {
                assert!(block_of[s] == usize::MAX, "state {s} occurs in two blocks");
                block_of[s] = id;
            }
        }
        assert!(block_of.iter().all(|&b| b != usize::MAX), "partition does not cover every state");
        Partition { blocks, block_of }
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn block_of(&self, state: usize) -> usize {
        self.block_of[state]
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn state_count(&self) -> usize {
        self.block_of.len()
    }

    pub fn same_block(&self, s: usize, t: usize) -> bool {
        self.block_of[s] == self.block_of[t]
    }

    /// `true` when every block has exactly one state.
    pub fn is_discrete(&self) -> bool {
        self.blocks.iter().all(|b| b.len() == 1)
    }
}

/// Weak-transition LTS over the same states: `s =a=> t` for observable `a`
/// when `s tau* a tau* t`, and `s =tau=> t` when `s tau* t` (zero steps
/// included, so every state gets a tau self-loop).
pub fn saturate_weak(lts: &Lts) -> Lts {
    let n = lts.state_count();
    let closure: Vec<Vec<usize>> = (0..n).map(|s| tau_closure(lts, s)).collect();
    let mut transitions = Vec::new();
    for s in 0..n {
        for &u in &closure[s] {
            transitions.push((s, Action::Tau, u));
            for (a, t) in lts.outgoing(u) {
                if a.is_tau() {
                    continue;
                }
                for &v in &closure[t] {
                    transitions.push((s, a.clone(), v));
                }
            }
        }
    }
    let weak = Lts::new(n, transitions).expect("saturation preserves state indices");
    let weak = match lts.terms() {
        Some(terms) => weak.with_terms(terms.to_vec()),
        None => weak,
    };
    weak.mark_saturated()
}

fn tau_closure(lts: &Lts, start: usize) -> Vec<usize> {
    let mut seen = vec![false; lts.state_count()];
    let mut order = vec![start];
    seen[start] = true;
    let mut i = 0;
    while i < order.len() {
        let s = order[i];
        i += 1;
        for t in lts.successors(s, &Action::Tau) {
            if !seen[t] {
                seen[t] = true;
                order.push(t);
            }
        }
    }
    order
}

/// One recorded split: the states of a block with an `action`-transition
/// into `splitter` went to `positive`, the rest to `negative`.
#[derive(Clone, Debug)]
struct Split {
    action: Action,
    splitter: Vec<usize>,
    positive: Vec<usize>,
    negative: Vec<usize>,
}

/// Outcome of partition refinement together with its split history.
pub struct Refinement {
    partition: Partition,
    splits: Vec<Split>,
}

impl Refinement {
    /// Refines `lts` (already saturated when weak bisimilarity is wanted).
    pub fn compute(lts: &Lts) -> Self {
        let n = lts.state_count();
        let alphabet: Vec<Action> = lts.alphabet().into_iter().collect();
        let succ: Vec<Vec<Vec<usize>>> = (0..n)
            .map(|s| alphabet.iter().map(|a| lts.successors(s, a).collect()).collect())
            .collect();

        let mut blocks: Vec<Vec<usize>> = if n == 0 { Vec::new() } else { vec![(0..n).collect()] };
        let mut block_of = vec![0usize; n];
        let mut splits = Vec::new();

        // Blocks stay sorted by smallest member, so block ids ascend with it.
        'refine: loop {
            for bi in 0..blocks.len() {
                if blocks[bi].len() < 2 {
                    continue;
                }
                for (ai, action) in alphabet.iter().enumerate() {
                    let signatures: Vec<Vec<usize>> = blocks[bi]
                        .iter()
                        .map(|&s| {
                            let mut sig: Vec<usize> = succ[s][ai].iter().map(|&t| block_of[t]).collect();
                            sig.sort_unstable();
                            sig.dedup();
                            sig
                        })
                        .collect();
                    let mut candidates: Vec<usize> = signatures.iter().flatten().copied().collect();
                    candidates.sort_unstable();
                    candidates.dedup();
                    for splitter in candidates {
                        let has: Vec<bool> =
                            signatures.iter().map(|sig| sig.binary_search(&splitter).is_ok()).collect();
                        if has.iter().all(|&h| h) {
                            continue;
                        }
                        let mut positive = Vec::new();
                        let mut negative = Vec::new();
                        for (&s, &h) in blocks[bi].iter().zip(&has) {
                            if h {
                                positive.push(s);
                            } else {
                                negative.push(s);
                            }
                        }
                        splits.push(Split {
                            action: action.clone(),
                            splitter: blocks[splitter].clone(),
                            positive: positive.clone(),
                            negative: negative.clone(),
                        });
                        blocks[bi] = positive;
                        blocks.push(negative);
                        blocks.sort_by_key(|b| b[0]);
                        for (id, block) in blocks.iter().enumerate() {
                            for &s in block {
                                block_of[s] = id;
                            }
                        }
                        continue 'refine;
                    }
                }
            }
            break;
        }
        Refinement { partition: Partition { blocks, block_of }, splits }
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn into_partition(self) -> Partition {
        self.partition
    }

    /// Number of splits performed.
    pub fn rounds(&self) -> usize {
        self.splits.len()
    }

    /// Index of the split that first put `s1` and `s2` into different blocks.
    fn separating_split(&self, s1: usize, s2: usize) -> Option<(usize, bool)> {
        self.splits.iter().enumerate().find_map(|(k, split)| {
            let in_pos = |s: usize| split.positive.binary_search(&s).is_ok();
            let in_neg = |s: usize| split.negative.binary_search(&s).is_ok();
            if in_pos(s1) && in_neg(s2) {
                Some((k, true))
            } else if in_neg(s1) && in_pos(s2) {
                Some((k, false))
            } else {
                None
            }
        })
    }

    /// An HML formula true at `s1` and false at `s2`, over the LTS this
    /// refinement was computed on. Modalities are weak when `weak` is set.
    pub fn distinguish(
        &self,
        lts: &Lts,
        s1: usize,
        s2: usize,
        weak: bool,
    ) -> Result<HmlFormula, EquivalenceError> {
        for s in [s1, s2] {
            if s >= self.partition.state_count() {
                return Err(EquivalenceError::StateOutOfRange { index: s, count: self.partition.state_count() });
            }
        }
        if self.partition.same_block(s1, s2) {
            return Err(EquivalenceError::StatesEquivalent(s1, s2));
        }
        let mut memo = HashMap::new();
        Ok(self.build(lts, s1, s2, weak, &mut memo))
    }

    fn build(
        &self,
        lts: &Lts,
        s1: usize,
        s2: usize,
        weak: bool,
        memo: &mut HashMap<(usize, usize), HmlFormula>,
    ) -> HmlFormula {
        if let Some(f) = memo.get(&(s1, s2)) {
            return f.clone();
        }
        let (k, s1_positive) =
            self.separating_split(s1, s2).expect("states in different blocks were split apart");
        let split = &self.splits[k];
        let a = &split.action;
        let in_splitter = |s: usize| split.splitter.binary_search(&s).is_ok();
        // Each recursive pair was separated by a split earlier than `k`.
        let formula = if s1_positive {
            let target = lts.successors(s1, a).find(|&t| in_splitter(t)).expect("positive side has a move");
            let mut parts: Vec<HmlFormula> = Vec::new();
            for t in lts.successors(s2, a) {
                let part = self.build(lts, target, t, weak, memo);
                if !parts.contains(&part) {
                    parts.push(part);
                }
            }
            let body = HmlFormula::conjunction(parts);
            if weak {
                HmlFormula::weak_diamond(a.clone(), body)
            } else {
                HmlFormula::diamond(a.clone(), body)
            }
        } else {
            let target = lts.successors(s2, a).find(|&t| in_splitter(t)).expect("positive side has a move");
            let mut parts: Vec<HmlFormula> = Vec::new();
            for t in lts.successors(s1, a) {
                let part = self.build(lts, t, target, weak, memo);
                if !parts.contains(&part) {
                    parts.push(part);
                }
            }
            let body = HmlFormula::disjunction(parts);
            if weak {
                HmlFormula::weak_box(a.clone(), body)
            } else {
                HmlFormula::boxed(a.clone(), body)
            }
        };
        memo.insert((s1, s2), formula.clone());
        formula
    }
}

/// Coarsest partition of `lts` stable under every (action, block) splitter:
/// its strong-bisimilarity classes.
pub fn refine_partition(lts: &Lts) -> Partition {
    Refinement::compute(lts).into_partition()
}

fn refinement_for(lts: &Lts, kind: Kind) -> (Refinement, Option<Lts>) {
    match kind {
        Kind::Strong => (Refinement::compute(lts), None),
        Kind::Weak => {
            let weak = saturate_weak(lts);
            (Refinement::compute(&weak), Some(weak))
        }
    }
}

/// Result of comparing two LTSs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    /// The refined partition of the (saturated, for weak) disjoint union.
    Equivalent { witness: Partition },
    /// Holds at the first root and fails at the second.
    Inequivalent { distinguishing: HmlFormula },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EquivalenceVerdict {
    pub kind: Kind,
    /// Index of the second LTS's initial state in the disjoint union.
    pub right_offset: usize,
    pub outcome: Outcome,
}

impl EquivalenceVerdict {
    pub fn equivalent(&self) -> bool {
        matches!(self.outcome, Outcome::Equivalent { .. })
    }

    pub fn witness_partition(&self) -> Option<&Partition> {
        match &self.outcome {
            Outcome::Equivalent { witness } => Some(witness),
            Outcome::Inequivalent { .. } => None,
        }
    }

    pub fn distinguishing(&self) -> Option<&HmlFormula> {
        match &self.outcome {
            Outcome::Inequivalent { distinguishing } => Some(distinguishing),
            Outcome::Equivalent { .. } => None,
        }
    }
}

/// Decides whether the initial states of `a` and `b` are `kind`-bisimilar.
///
/// On inequivalence the distinguishing formula is checked against the
/// disjoint union before it is returned.
pub fn check_equivalence(a: &Lts, b: &Lts, kind: Kind) -> EquivalenceVerdict {
    let (union, offset) = a.disjoint_union(b);
    if a.state_count() == 0 || b.state_count() == 0 {
        // Degenerate inputs: an LTS without states has no root to compare.
        let witness = Partition::from_blocks(union.state_count(), vec![(0..union.state_count()).collect()]);
        return EquivalenceVerdict { kind, right_offset: offset, outcome: Outcome::Equivalent { witness } };
    }
    let (refinement, saturated) = refinement_for(&union, kind);
    let outcome = if refinement.partition().same_block(0, offset) {
        Outcome::Equivalent { witness: refinement.into_partition() }
    } else {
        let graph = saturated.as_ref().unwrap_or(&union);
        let formula = refinement
            .distinguish(graph, 0, offset, kind == Kind::Weak)
            .expect("roots lie in different blocks");
        let mut checker = ModelChecker::new(&union);
        assert!(
            checker.holds(0, &formula).expect("root in range")
                && !checker.holds(offset, &formula).expect("root in range"),
            "distinguishing formula {formula} failed verification"
        );
        Outcome::Inequivalent { distinguishing: formula }
    };
    EquivalenceVerdict { kind, right_offset: offset, outcome }
}

/// A formula true at `s1` and false at `s2` of `lts` (weak modalities for
/// [`Kind::Weak`]), built from the refinement history.
pub fn distinguishing_formula(
    lts: &Lts,
    s1: usize,
    s2: usize,
    kind: Kind,
) -> Result<HmlFormula, EquivalenceError> {
    let (refinement, saturated) = refinement_for(lts, kind);
    refinement.distinguish(saturated.as_ref().unwrap_or(lts), s1, s2, kind == Kind::Weak)
}

/// The `kind`-bisimilarity partition of `lts`.
pub fn partition_for(lts: &Lts, kind: Kind) -> Partition {
    refinement_for(lts, kind).0.into_partition()
}

/// Quotient of `lts` by its `kind`-bisimilarity classes. For weak kind the
/// original transitions are lifted and tau self-loops on a class dropped.
pub fn minimize_lts(lts: &Lts, kind: Kind) -> Lts {
    let partition = partition_for(lts, kind);
    let transitions = lts.transitions().filter_map(|t| {
        let (from, to) = (partition.block_of(t.source), partition.block_of(t.target));
        if kind == Kind::Weak && t.action.is_tau() && from == to {
            None
        } else {
            Some((from, t.action.clone(), to))
        }
    });
    let quotient = Lts::new(partition.len(), transitions).expect("block ids are in range");
    match lts.terms() {
        Some(terms) => {
            let reps = partition.blocks().iter().map(|b| terms[b[0]].clone()).collect();
            quotient.with_terms(reps)
        }
        None => quotient,
    }
}

/// Greatest-fixpoint bisimilarity check on the full relation over the
/// disjoint union, deleting pairs that violate the transfer condition until
/// nothing changes. Weak moves are matched by tau* a tau* sequences
/// computed here from scratch. Kept deliberately simple as a test oracle.
pub fn naive_equivalence_oracle(a: &Lts, b: &Lts, kind: Kind) -> Result<bool, EquivalenceError> {
    let n = a.state_count() + b.state_count();
    if n > ORACLE_STATE_LIMIT {
        return Err(EquivalenceError::OracleTooLarge { states: n, limit: ORACLE_STATE_LIMIT });
    }
    if a.state_count() == 0 || b.state_count() == 0 {
        return Ok(true);
    }
    let (union, offset) = a.disjoint_union(b);
    let moves: Vec<Vec<(Action, usize)>> =
        (0..n).map(|s| union.outgoing(s).map(|(x, t)| (x.clone(), t)).collect()).collect();

    // answers[s][action] = states that can answer an `action` move from s.
    let answers: Vec<HashMap<Action, Vec<usize>>> = match kind {
        Kind::Strong => moves
            .iter()
            .map(|m| {
                let mut map: HashMap<Action, Vec<usize>> = HashMap::new();
                for (x, t) in m {
                    map.entry(x.clone()).or_default().push(*t);
                }
                map
            })
            .collect(),
        Kind::Weak => {
            let mut reach = vec![vec![false; n]; n];
            for (s, row) in reach.iter_mut().enumerate() {
                row[s] = true;
            }
            let mut changed = true;
            while changed {
                changed = false;
                for row in reach.iter_mut() {
                    for u in 0..n {
                        if !row[u] {
                            continue;
                        }
                        for (x, v) in &moves[u] {
                            if x.is_tau() && !row[*v] {
                                row[*v] = true;
                                changed = true;
                            }
                        }
                    }
                }
            }
            (0..n)
                .map(|s| {
                    let mut map: HashMap<Action, Vec<usize>> = HashMap::new();
                    map.insert(Action::Tau, (0..n).filter(|&v| reach[s][v]).collect());
                    for u in (0..n).filter(|&u| reach[s][u]) {
                        for (x, w) in &moves[u] {
                            if x.is_tau() {
                                continue;
                            }
                            let entry = map.entry(x.clone()).or_default();
                            entry.extend((0..n).filter(|&v| reach[*w][v]));
                        }
                    }
                    for targets in map.values_mut() {
                        targets.sort_unstable();
                        targets.dedup();
                    }
                    map
                })
                .collect()
        }
    };

    let mut related = vec![vec![true; n]; n];
    let simulates = |related: &Vec<Vec<bool>>, p: usize, q: usize| {
        moves[p].iter().all(|(x, p2)| {
            answers[q].get(x).is_some_and(|qs| qs.iter().any(|&q2| related[*p2][q2]))
        })
    };
    let mut changed = true;
    while changed {
        changed = false;
        for p in 0..n {
            for q in 0..n {
                if related[p][q] && !(simulates(&related, p, q) && simulates(&related, q, p)) {
                    related[p][q] = false;
                    changed = true;
                }
            }
        }
    }
    Ok(related[0][offset])
}
