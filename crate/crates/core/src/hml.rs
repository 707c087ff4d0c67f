//! Hennessy–Milner logic with strong and weak modalities.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use crate::equivalence::saturate_weak;
use crate::semantics::{Lts, SemanticsError};
use crate::terms::Action;

/// An HML formula. Children are shared so that generated formulas can reuse
/// subformulas without copying.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum HmlFormula {
    True,
    False,
    Not(Arc<HmlFormula>),
    And(Arc<HmlFormula>, Arc<HmlFormula>),
    Or(Arc<HmlFormula>, Arc<HmlFormula>),
    Diamond(Action, Arc<HmlFormula>),
    Box(Action, Arc<HmlFormula>),
    WeakDiamond(Action, Arc<HmlFormula>),
    WeakBox(Action, Arc<HmlFormula>),
}

impl HmlFormula {
    #[allow(clippy::should_implement_trait)]
    pub fn not(f: HmlFormula) -> Self {
        HmlFormula::Not(Arc::new(f))
    }

    pub fn and(f: HmlFormula, g: HmlFormula) -> Self {
        HmlFormula::And(Arc::new(f), Arc::new(g))
    }

    pub fn or(f: HmlFormula, g: HmlFormula) -> Self {
        HmlFormula::Or(Arc::new(f), Arc::new(g))
    }

    pub fn diamond(a: Action, f: HmlFormula) -> Self {
        HmlFormula::Diamond(a, Arc::new(f))
    }

    pub fn boxed(a: Action, f: HmlFormula) -> Self {
        HmlFormula::Box(a, Arc::new(f))
    }

    pub fn weak_diamond(a: Action, f: HmlFormula) -> Self {
        HmlFormula::WeakDiamond(a, Arc::new(f))
    }

    pub fn weak_box(a: Action, f: HmlFormula) -> Self {
        HmlFormula::WeakBox(a, Arc::new(f))
    }

    /// Conjunction of all `parts`; `tt` when empty.
    pub fn conjunction(parts: impl IntoIterator<Item = HmlFormula>) -> Self {
        parts.into_iter().reduce(HmlFormula::and).unwrap_or(HmlFormula::True)
    }

    /// Disjunction of all `parts`; `ff` when empty.
    pub fn disjunction(parts: impl IntoIterator<Item = HmlFormula>) -> Self {
        parts.into_iter().reduce(HmlFormula::or).unwrap_or(HmlFormula::False)
    }

    /// Nesting depth of modalities.
    pub fn modal_depth(&self) -> usize {
        match self {
            HmlFormula::True | HmlFormula::False => 0,
            HmlFormula::Not(f) => f.modal_depth(),
            HmlFormula::And(f, g) | HmlFormula::Or(f, g) => f.modal_depth().max(g.modal_depth()),
            HmlFormula::Diamond(_, f)
            | HmlFormula::Box(_, f)
            | HmlFormula::WeakDiamond(_, f)
            | HmlFormula::WeakBox(_, f) => 1 + f.modal_depth(),
        }
    }

    /// Visits each modality's action.
    pub fn for_each_modality(&self, visit: &mut impl FnMut(&HmlFormula, &Action)) {
        match self {
            HmlFormula::True | HmlFormula::False => {}
            HmlFormula::Not(f) => f.for_each_modality(visit),
            HmlFormula::And(f, g) | HmlFormula::Or(f, g) => {
                f.for_each_modality(visit);
                g.for_each_modality(visit);
            }
            HmlFormula::Diamond(a, f)
            | HmlFormula::Box(a, f)
            | HmlFormula::WeakDiamond(a, f)
            | HmlFormula::WeakBox(a, f) => {
                visit(self, a);
                f.for_each_modality(visit);
            }
        }
    }

    fn uses_weak(&self) -> bool {
        let mut weak = false;
        self.for_each_modality(&mut |f, _| {
            weak |= matches!(f, HmlFormula::WeakDiamond(..) | HmlFormula::WeakBox(..))
        });
        weak
    }
}

const PREC_OR: u8 = 0;
const PREC_AND: u8 = 1;
const PREC_UNARY: u8 = 2;

fn precedence(f: &HmlFormula) -> u8 {
    match f {
        HmlFormula::Or(..) => PREC_OR,
        HmlFormula::And(..) => PREC_AND,
        _ => PREC_UNARY,
    }
}

fn write_at(out: &mut fmt::Formatter<'_>, f: &HmlFormula, min: u8) -> fmt::Result {
    if precedence(f) < min {
        write!(out, "({f})")
    } else {
        write!(out, "{f}")
    }
}

impl fmt::Display for HmlFormula {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HmlFormula::True => write!(out, "tt"),
            HmlFormula::False => write!(out, "ff"),
            HmlFormula::Not(f) => {
                write!(out, "not ")?;
                write_at(out, f, PREC_UNARY)
            }
            HmlFormula::And(f, g) => {
                write_at(out, f, PREC_AND)?;
                write!(out, " and ")?;
                write_at(out, g, PREC_UNARY)
            }
            HmlFormula::Or(f, g) => {
                write_at(out, f, PREC_OR)?;
                write!(out, " or ")?;
                write_at(out, g, PREC_AND)
            }
            HmlFormula::Diamond(a, f) => {
                write!(out, "<{a}> ")?;
                write_at(out, f, PREC_UNARY)
            }
            HmlFormula::Box(a, f) => {
                write!(out, "[{a}] ")?;
                write_at(out, f, PREC_UNARY)
            }
            HmlFormula::WeakDiamond(a, f) => {
                write!(out, "<<{a}>> ")?;
                write_at(out, f, PREC_UNARY)
            }
            HmlFormula::WeakBox(a, f) => {
                write!(out, "[[{a}]] ")?;
                write_at(out, f, PREC_UNARY)
            }
        }
    }
}

/// Maximum depth of an explanation trace.
pub const TRACE_DEPTH_LIMIT: usize = 50;
const TRACE_NODE_BUDGET: usize = 2_000;

/// One step of the explanation of a verdict.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trace {
    pub state: usize,
    pub formula: String,
    pub holds: bool,
    pub note: String,
    pub children: Vec<Trace>,
}

impl Trace {
    /// Indented multi-line rendering; `label` names states.
    pub fn render(&self, label: &dyn Fn(usize) -> String) -> String {
        let mut out = String::new();
        self.render_into(&mut out, 0, label);
        out
    }

    fn render_into(&self, out: &mut String, indent: usize, label: &dyn Fn(usize) -> String) {
        let verdict = if self.holds { "holds" } else { "fails" };
        out.push_str(&format!(
            "{:indent$}state {} [{}] {verdict}: {}",
            "",
            self.state,
            label(self.state),
            self.formula,
            indent = indent * 2
        ));
        if !self.note.is_empty() {
            out.push_str(&format!("  ({})", self.note));
        }
        out.push('\n');
        for child in &self.children {
            child.render_into(out, indent + 1, label);
        }
    }

    /// Number of nodes in the trace.
    pub fn size(&self) -> usize {
        1 + self.children.iter().map(Trace::size).sum::<usize>()
    }

    pub fn depth(&self) -> usize {
        1 + self.children.iter().map(Trace::depth).max().unwrap_or(0)
    }
}

/// Result of [`evaluate_formula`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Evaluation {
    pub holds: bool,
    pub trace: Trace,
}

/// Memoizing evaluator bound to one LTS. The weak-transition LTS is computed
/// on first use of a weak modality and reused afterwards.
pub struct ModelChecker<'a> {
    lts: &'a Lts,
    weak: Option<Lts>,
    memo: HashMap<(usize, usize), bool>,
}

impl<'a> ModelChecker<'a> {
    pub fn new(lts: &'a Lts) -> Self {
        ModelChecker { lts, weak: None, memo: HashMap::new() }
    }

    pub fn lts(&self) -> &Lts {
        self.lts
    }

    fn weak_lts(&mut self) -> &Lts {
        if self.weak.is_none() {
            self.weak = Some(if self.lts.is_saturated() {
                self.lts.clone()
            } else {
                saturate_weak(self.lts)
            });
        }
        self.weak.as_ref().expect("initialized above")
    }

    /// Satisfaction of `f` at `state`.
    pub fn holds(&mut self, state: usize, f: &HmlFormula) -> Result<bool, SemanticsError> {
        self.lts.check_state(state)?;
        if f.uses_weak() {
            self.weak_lts();
        }
        // Memo keys are node addresses, only valid while `f` is alive.
        self.memo.clear();
        Ok(self.eval(state, f))
    }

    fn successors(&self, state: usize, f: &HmlFormula) -> Vec<usize> {
        match f {
            HmlFormula::Diamond(a, _) | HmlFormula::Box(a, _) => self.lts.successors(state, a).collect(),
            HmlFormula::WeakDiamond(a, _) | HmlFormula::WeakBox(a, _) => {
                let weak = self.weak.as_ref().expect("weak LTS prepared before evaluation");
                weak.successors(state, a).collect()
            }
            _ => Vec::new(),
        }
    }

    fn eval(&mut self, state: usize, f: &HmlFormula) -> bool {
        let key = (f as *const HmlFormula as usize, state);
        if let Some(&v) = self.memo.get(&key) {
            return v;
        }
        let value = match f {
            HmlFormula::True => true,
            HmlFormula::False => false,
            HmlFormula::Not(g) => !self.eval(state, g),
            HmlFormula::And(g, h) => self.eval(state, g) && self.eval(state, h),
            HmlFormula::Or(g, h) => self.eval(state, g) || self.eval(state, h),
            HmlFormula::Diamond(_, g) | HmlFormula::WeakDiamond(_, g) => {
                self.successors(state, f).into_iter().any(|t| self.eval(t, g))
            }
            HmlFormula::Box(_, g) | HmlFormula::WeakBox(_, g) => {
                self.successors(state, f).into_iter().all(|t| self.eval(t, g))
            }
        };
        self.memo.insert(key, value);
        value
    }

    /// Satisfaction of `f` at `state` with an explanation trace.
    pub fn evaluate(&mut self, state: usize, f: &HmlFormula) -> Result<Evaluation, SemanticsError> {
        let holds = self.holds(state, f)?;
        let mut budget = TRACE_NODE_BUDGET;
        let trace = self.explain(state, f, 1, &mut budget);
        Ok(Evaluation { holds, trace })
    }

    fn explain(&mut self, state: usize, f: &HmlFormula, depth: usize, budget: &mut usize) -> Trace {
        let holds = self.eval(state, f);
        let mut node = Trace { state, formula: f.to_string(), holds, note: String::new(), children: Vec::new() };
        *budget = budget.saturating_sub(1);
        if depth >= TRACE_DEPTH_LIMIT || *budget == 0 {
            if !matches!(f, HmlFormula::True | HmlFormula::False) {
                node.note = "trace truncated".into();
            }
            return node;
        }
        match f {
            HmlFormula::True | HmlFormula::False => {}
            HmlFormula::Not(g) => node.children.push(self.explain(state, g, depth + 1, budget)),
            HmlFormula::And(g, h) | HmlFormula::Or(g, h) => {
                let conjunctive = matches!(f, HmlFormula::And(..));
                // A holding conjunction (failing disjunction) needs both sides;
                // otherwise one decisive side suffices.
                if holds == conjunctive {
                    node.children.push(self.explain(state, g, depth + 1, budget));
                    node.children.push(self.explain(state, h, depth + 1, budget));
                } else {
                    let decisive = if self.eval(state, g) == holds { g } else { h };
                    let decisive = decisive.clone();
                    node.children.push(self.explain(state, &decisive, depth + 1, budget));
                }
            }
            HmlFormula::Diamond(a, g)
            | HmlFormula::Box(a, g)
            | HmlFormula::WeakDiamond(a, g)
            | HmlFormula::WeakBox(a, g) => {
                let existential = matches!(f, HmlFormula::Diamond(..) | HmlFormula::WeakDiamond(..));
                let arrow = if matches!(f, HmlFormula::Diamond(..) | HmlFormula::Box(..)) {
                    format!("-{a}->")
                } else {
                    format!("={a}=>")
                };
                let succ = self.successors(state, f);
                let witness = succ.iter().copied().find(|&t| self.eval(t, g) == existential);
                match (existential, holds, witness) {
                    (true, true, Some(t)) => {
                        node.note = format!("witness {arrow} state {t}");
                        node.children.push(self.explain(t, g, depth + 1, budget));
                    }
                    (false, false, Some(t)) => {
                        node.note = format!("counterexample {arrow} state {t}");
                        node.children.push(self.explain(t, g, depth + 1, budget));
                    }
                    (true, _, _) if succ.is_empty() => node.note = format!("no {arrow} successors"),
                    (true, _, _) => {
                        node.note = format!("all {arrow} successors {:?} fail the body", succ);
                        for t in succ {
                            if *budget == 0 {
                                break;
                            }
                            node.children.push(self.explain(t, g, depth + 1, budget));
                        }
                    }
                    (false, _, _) if succ.is_empty() => {
                        node.note = format!("no {arrow} successors (vacuous)")
                    }
                    (false, _, _) => node.note = format!("all {} {arrow} successors satisfy the body", succ.len()),
                }
            }
        }
        node
    }
}

/// Evaluates `f` at `state` of `lts`, returning the verdict and an
/// explanation: every exhausted successor for a failing diamond and one
/// offending successor (recursively) for a failing box.
pub fn evaluate_formula(lts: &Lts, state: usize, f: &HmlFormula) -> Result<Evaluation, SemanticsError> {
    ModelChecker::new(lts).evaluate(state, f)
}
