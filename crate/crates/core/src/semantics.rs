//! Structural operational semantics and explicit-state LTS generation.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::sync::Arc;

use crate::terms::{Action, Environment, ProcessTerm};

/// Default bound on the number of states explored by [`build_lts`].
pub const DEFAULT_MAX_STATES: usize = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Transition<'a> {
    pub source: usize,
    pub action: &'a Action,
    pub target: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SemanticsError {
    #[error("constant `{0}` is not defined")]
    UnboundConstant(String),
    #[error("state bound exceeded: more than {max_states} states (frontier holds {frontier} unexplored states)")]
    StateBoundExceeded { max_states: usize, frontier: usize },
    #[error("state {index} out of range (LTS has {count} states)")]
    StateOutOfRange { index: usize, count: usize },
    #[error("transition ({from}, {action}, {to}) refers to a state outside 0..{count}")]
    BadTransition { from: usize, action: Action, to: usize, count: usize },
}

/// A finite labelled transition system. State 0 is the initial state.
///
/// Transitions are kept sorted by (source, action, target) with duplicates
/// removed, so the outgoing transitions of a state form a contiguous slice.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lts {
    state_count: usize,
    transitions: Vec<(usize, Action, usize)>,
    offsets: Vec<usize>,
    terms: Option<Vec<ProcessTerm>>,
    saturated: bool,
}

impl Lts {
    /// Builds an LTS over `state_count` states from arbitrary transitions.
    pub fn new(
        state_count: usize,
        transitions: impl IntoIterator<Item = (usize, Action, usize)>,
    ) -> Result<Self, SemanticsError> {
        let mut transitions: Vec<_> = transitions.into_iter().collect();
        if let Some((s, a, t)) =
            transitions.iter().find(|(s, _, t)| *s >= state_count || *t >= state_count)
        {
            return Err(SemanticsError::BadTransition {
                from: *s,
                action: a.clone(),
                to: *t,
                count: state_count,
            });
        }
        transitions.sort();
        transitions.dedup();
        let mut offsets = vec![0; state_count + 1];
        for (s, _, _) in &transitions {
            offsets[s + 1] += 1;
        }
        for i in 0..state_count {
            offsets[i + 1] += offsets[i];
        }
        Ok(Lts { state_count, transitions, offsets, terms: None, saturated: false })
    }

    pub(crate) fn with_terms(mut self, terms: Vec<ProcessTerm>) -> Self {
        debug_assert_eq!(terms.len(), self.state_count);
        self.terms = Some(terms);
        self
    }

    pub(crate) fn mark_saturated(mut self) -> Self {
        self.saturated = true;
        self
    }

    pub fn state_count(&self) -> usize {
        self.state_count
    }

    pub fn transition_count(&self) -> usize {
        self.transitions.len()
    }

    /// All transitions in (source, action, target) order.
    pub fn transitions(&self) -> impl Iterator<Item = Transition<'_>> + '_ {
        self.transitions.iter().map(|(s, a, t)| Transition { source: *s, action: a, target: *t })
    }

    /// Outgoing transitions of `state`, ordered by (action, target).
    pub fn outgoing(&self, state: usize) -> impl Iterator<Item = (&Action, usize)> + '_ {
        self.transitions[self.offsets[state]..self.offsets[state + 1]]
            .iter()
            .map(|(_, a, t)| (a, *t))
    }

    /// Targets of `action`-transitions from `state`.
    pub fn successors<'a>(&'a self, state: usize, action: &'a Action) -> impl Iterator<Item = usize> + 'a {
        self.outgoing(state).filter(move |(a, _)| *a == action).map(|(_, t)| t)
    }

    /// Labels occurring on transitions, in name order.
    pub fn alphabet(&self) -> BTreeSet<Action> {
        self.transitions.iter().map(|(_, a, _)| a.clone()).collect()
    }

    /// The process term of each state, when the LTS was generated from a model.
    pub fn terms(&self) -> Option<&[ProcessTerm]> {
        self.terms.as_deref()
    }

    pub fn term(&self, state: usize) -> Option<&ProcessTerm> {
        self.terms.as_ref().and_then(|t| t.get(state))
    }

    /// Whether this LTS holds weak transitions produced by saturation.
    pub fn is_saturated(&self) -> bool {
        self.saturated
    }

    pub fn check_state(&self, state: usize) -> Result<(), SemanticsError> {
        if state < self.state_count {
            Ok(())
        } else {
            Err(SemanticsError::StateOutOfRange { index: state, count: self.state_count })
        }
    }

    /// Short human-readable name of a state: its term when known, else its index.
    pub fn state_label(&self, state: usize) -> String {
        match self.term(state) {
            Some(t) => t.to_string(),
            None => format!("s{state}"),
        }
    }

    /// Disjoint union: states of `other` are shifted by `self.state_count()`,
    /// which is returned alongside. State terms are dropped.
    pub fn disjoint_union(&self, other: &Lts) -> (Lts, usize) {
        let offset = self.state_count;
        let transitions = self.transitions.iter().cloned().chain(
            other.transitions.iter().map(|(s, a, t)| (s + offset, a.clone(), t + offset)),
        );
        let union = Lts::new(offset + other.state_count, transitions)
            .expect("union of valid LTSs is valid");
        (union, offset)
    }

    /// States reachable from `state` (including itself), in BFS order.
    pub fn reachable_from(&self, state: usize) -> Vec<usize> {
        let mut seen = vec![false; self.state_count];
        let mut order = vec![state];
        seen[state] = true;
        let mut i = 0;
        while i < order.len() {
            let s = order[i];
            i += 1;
            for (_, t) in self.outgoing(s) {
                if !seen[t] {
                    seen[t] = true;
                    order.push(t);
                }
            }
        }
        order
    }

    /// `true` when some state can return to itself through a nonempty path.
    pub fn has_cycle(&self) -> bool {
        // Kahn's algorithm: a cycle exists iff not every state gets removed.
        let mut indegree = vec![0usize; self.state_count];
        for (_, _, t) in &self.transitions {
            indegree[*t] += 1;
        }
        let mut queue: VecDeque<usize> = (0..self.state_count).filter(|s| indegree[*s] == 0).collect();
        let mut removed = 0;
        while let Some(s) = queue.pop_front() {
            removed += 1;
            for (_, t) in self.outgoing(s) {
                indegree[t] -= 1;
                if indegree[t] == 0 {
                    queue.push_back(t);
                }
            }
        }
        removed < self.state_count
    }

    /// States with no outgoing transitions.
    pub fn deadlock_states(&self) -> Vec<usize> {
        (0..self.state_count).filter(|&s| self.offsets[s] == self.offsets[s + 1]).collect()
    }
}

/// One-step SOS derivatives of `term`, sorted and without duplicates.
pub fn step_transitions(
    term: &ProcessTerm,
    env: &Environment,
) -> Result<Vec<(Action, ProcessTerm)>, SemanticsError> {
    let mut out = Vec::new();
    derive(term, env, &mut out)?;
    out.sort();
    out.dedup();
    Ok(out)
}

fn derive(
    term: &ProcessTerm,
    env: &Environment,
    out: &mut Vec<(Action, ProcessTerm)>,
) -> Result<(), SemanticsError> {
    match term {
        ProcessTerm::Nil => {}
        ProcessTerm::Prefix(action, cont) => out.push((action.clone(), (**cont).clone())),
        ProcessTerm::Choice(l, r) => {
            derive(l, env, out)?;
            derive(r, env, out)?;
        }
        ProcessTerm::Parallel(l, sync, r) => {
            let mut left = Vec::new();
            let mut right = Vec::new();
            derive(l, env, &mut left)?;
            derive(r, env, &mut right)?;
            let synchronized = |a: &Action| match a {
                Action::Observable(name) => sync.contains(name),
                Action::Tau => false,
            };
            for (a, l2) in &left {
                if !synchronized(a) {
                    out.push((a.clone(), ProcessTerm::Parallel(Arc::new(l2.clone()), sync.clone(), r.clone())));
                }
            }
            for (a, r2) in &right {
                if !synchronized(a) {
                    out.push((a.clone(), ProcessTerm::Parallel(l.clone(), sync.clone(), Arc::new(r2.clone()))));
                }
            }
            // The joint move keeps its observable label so that an enclosing
            // parallel operator can synchronize on it again.
            for (a, l2) in left.iter().filter(|(a, _)| synchronized(a)) {
                for (_, r2) in right.iter().filter(|(b, _)| b == a) {
                    out.push((
                        a.clone(),
                        ProcessTerm::Parallel(Arc::new(l2.clone()), sync.clone(), Arc::new(r2.clone())),
                    ));
                }
            }
        }
        ProcessTerm::Hide(body, hidden) => {
            let mut inner = Vec::new();
            derive(body, env, &mut inner)?;
            for (a, b2) in inner {
                let label = match &a {
                    Action::Observable(name) if hidden.contains(name) => Action::Tau,
                    _ => a,
                };
                out.push((label, ProcessTerm::Hide(Arc::new(b2), hidden.clone())));
            }
        }
        ProcessTerm::Const(name) => {
            let body = env.get(name).ok_or_else(|| SemanticsError::UnboundConstant(name.clone()))?;
            derive(body, env, out)?;
        }
    }
    Ok(())
}

/// Replaces subterms that coincide with a definition body by the defining
/// constant, bottom-up. `Const` and `0` bodies are never folded.
///
/// A constant has exactly the transitions of its body, so folding never
/// changes behaviour; it makes a process that returns to a defined
/// configuration return to the same LTS state.
pub struct Folder {
    bodies: HashMap<ProcessTerm, String>,
}

impl Folder {
    pub fn new(env: &Environment) -> Self {
        let mut bodies = HashMap::new();
        for (name, body) in env.defs() {
            if !matches!(body, ProcessTerm::Const(_) | ProcessTerm::Nil) {
                bodies.entry(body.clone()).or_insert_with(|| name.clone());
            }
        }
        Folder { bodies }
    }

    pub fn fold(&self, term: &ProcessTerm) -> ProcessTerm {
        let rebuilt = match term {
            ProcessTerm::Nil | ProcessTerm::Const(_) => return term.clone(),
            ProcessTerm::Prefix(a, cont) => ProcessTerm::Prefix(a.clone(), self.fold_arc(cont)),
            ProcessTerm::Choice(l, r) => ProcessTerm::Choice(self.fold_arc(l), self.fold_arc(r)),
            ProcessTerm::Parallel(l, sync, r) => {
                ProcessTerm::Parallel(self.fold_arc(l), sync.clone(), self.fold_arc(r))
            }
            ProcessTerm::Hide(body, hidden) => ProcessTerm::Hide(self.fold_arc(body), hidden.clone()),
        };
        match self.bodies.get(&rebuilt) {
            Some(name) => ProcessTerm::Const(name.clone()),
            None => rebuilt,
        }
    }

    fn fold_arc(&self, term: &Arc<ProcessTerm>) -> Arc<ProcessTerm> {
        let folded = self.fold(term);
        if folded == **term {
            term.clone()
        } else {
            Arc::new(folded)
        }
    }
}

/// Breadth-first LTS generation from the root constant of `env`.
///
/// States are folded terms (see [`Folder`]) deduplicated by structural
/// equality; successors are visited in (action name, rendered target) order.
pub fn build_lts(env: &Environment, max_states: usize) -> Result<Lts, SemanticsError> {
    let folder = Folder::new(env);
    let root = ProcessTerm::Const(env.root().to_string());
    if env.get(env.root()).is_none() {
        return Err(SemanticsError::UnboundConstant(env.root().to_string()));
    }
    let mut index: HashMap<ProcessTerm, usize> = HashMap::new();
    let mut terms = vec![root.clone()];
    index.insert(root, 0);
    let mut transitions = Vec::new();
    let mut next = 0;
    while next < terms.len() {
        let source = next;
        next += 1;
        let mut derivatives: Vec<(Action, ProcessTerm, String)> = step_transitions(&terms[source], env)?
            .into_iter()
            .map(|(a, t)| {
                let folded = folder.fold(&t);
                let rendered = folded.to_string();
                (a, folded, rendered)
            })
            .collect();
        derivatives.sort_by(|x, y| x.0.cmp(&y.0).then_with(|| x.2.cmp(&y.2)));
        for (action, target, _) in derivatives {
            let target_index = match index.get(&target) {
                Some(&i) => i,
                None => {
                    if terms.len() == max_states {
                        return Err(SemanticsError::StateBoundExceeded {
                            max_states,
                            frontier: terms.len() - next + 1,
                        });
                    }
                    let i = terms.len();
                    index.insert(target.clone(), i);
                    terms.push(target);
                    i
                }
            };
            transitions.push((source, action, target_index));
        }
    }
    Ok(Lts::new(terms.len(), transitions)?.with_terms(terms))
}

/// Labels of every transition reachable from `state`.
pub fn reachable_action_set(lts: &Lts, state: usize) -> Result<BTreeSet<Action>, SemanticsError> {
    lts.check_state(state)?;
    let mut actions = BTreeSet::new();
    for s in lts.reachable_from(state) {
        actions.extend(lts.outgoing(s).map(|(a, _)| a.clone()));
    }
    Ok(actions)
}
