//! Abstract syntax of process terms and definition environments.
//!
//! Terms are immutable trees with shared (`Arc`) children. Synchronization and
//! hiding sets are stored as `BTreeSet`s, so two terms built from the same
//! operands with permuted or repeated set members compare equal. Choice and
//! parallel operands are never reordered: state identity stays syntactic.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::sync::Arc;

use indexmap::IndexMap;

/// The reserved spelling of the internal action.
pub const TAU: &str = "tau";

/// `true` when `name` matches `[A-Za-z_][A-Za-z0-9_]*`.
pub fn is_identifier(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// A transition label: either a named observable action or the internal `tau`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Action {
    Tau,
    Observable(String),
}

impl Action {
    /// Builds an observable action, rejecting malformed names and `tau`.
    pub fn observable(name: &str) -> Result<Self, InvalidActionName> {
        if !is_identifier(name) || name == TAU {
            return Err(InvalidActionName(name.to_string()));
        }
        Ok(Action::Observable(name.to_string()))
    }

    /// Parses a label as written in models and formulas: `tau` is internal.
    pub fn from_label(name: &str) -> Result<Self, InvalidActionName> {
        if name == TAU {
            Ok(Action::Tau)
        } else {
            Action::observable(name)
        }
    }

    pub fn name(&self) -> &str {
        match self {
            Action::Tau => TAU,
            Action::Observable(name) => name,
        }
    }

    pub fn is_tau(&self) -> bool {
        matches!(self, Action::Tau)
    }
}

// Actions order by their rendered name, which is the order used for BFS
// successor sorting and for splitter tie-breaking.
impl Ord for Action {
    fn cmp(&self, other: &Self) -> Ordering {
        self.name().cmp(other.name())
    }
}

impl PartialOrd for Action {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("`{0}` is not a valid observable action name")]
pub struct InvalidActionName(pub String);

/// A process term.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum ProcessTerm {
    Nil,
    Prefix(Action, Arc<ProcessTerm>),
    Choice(Arc<ProcessTerm>, Arc<ProcessTerm>),
    Parallel(Arc<ProcessTerm>, BTreeSet<String>, Arc<ProcessTerm>),
    Hide(Arc<ProcessTerm>, BTreeSet<String>),
    Const(String),
}

impl ProcessTerm {
    pub fn prefix(action: Action, cont: ProcessTerm) -> Self {
        ProcessTerm::Prefix(action, Arc::new(cont))
    }

    pub fn choice(left: ProcessTerm, right: ProcessTerm) -> Self {
        ProcessTerm::Choice(Arc::new(left), Arc::new(right))
    }

    /// Right-nested choice over `alternatives`; `Nil` when empty.
    pub fn choice_of(alternatives: impl IntoIterator<Item = ProcessTerm>) -> Self {
        let mut items: Vec<ProcessTerm> = alternatives.into_iter().collect();
        let Some(mut acc) = items.pop() else {
            return ProcessTerm::Nil;
        };
        while let Some(item) = items.pop() {
            acc = ProcessTerm::choice(item, acc);
        }
        acc
    }

    pub fn parallel<S: Into<String>>(
        left: ProcessTerm,
        sync: impl IntoIterator<Item = S>,
        right: ProcessTerm,
    ) -> Self {
        ProcessTerm::Parallel(
            Arc::new(left),
            sync.into_iter().map(Into::into).collect(),
            Arc::new(right),
        )
    }

    pub fn hide<S: Into<String>>(body: ProcessTerm, hidden: impl IntoIterator<Item = S>) -> Self {
        ProcessTerm::Hide(Arc::new(body), hidden.into_iter().map(Into::into).collect())
    }

    pub fn constant(name: impl Into<String>) -> Self {
        ProcessTerm::Const(name.into())
    }

    /// Calls `visit` on every constant name occurring in the term.
    pub fn for_each_constant(&self, visit: &mut impl FnMut(&str)) {
        match self {
            ProcessTerm::Nil => {}
            ProcessTerm::Prefix(_, cont) => cont.for_each_constant(visit),
            ProcessTerm::Choice(l, r) | ProcessTerm::Parallel(l, _, r) => {
                l.for_each_constant(visit);
                r.for_each_constant(visit);
            }
            ProcessTerm::Hide(body, _) => body.for_each_constant(visit),
            ProcessTerm::Const(name) => visit(name),
        }
    }

    /// Constants reachable without crossing an action prefix.
    fn unguarded_constants(&self, out: &mut Vec<String>) {
        match self {
            ProcessTerm::Nil | ProcessTerm::Prefix(..) => {}
            ProcessTerm::Choice(l, r) | ProcessTerm::Parallel(l, _, r) => {
                l.unguarded_constants(out);
                r.unguarded_constants(out);
            }
            ProcessTerm::Hide(body, _) => body.unguarded_constants(out),
            ProcessTerm::Const(name) => out.push(name.clone()),
        }
    }

    fn for_each_name(&self, visit: &mut impl FnMut(&str)) {
        match self {
            ProcessTerm::Nil | ProcessTerm::Const(_) => {}
            ProcessTerm::Prefix(action, cont) => {
                if let Action::Observable(name) = action {
                    visit(name);
                }
                cont.for_each_name(visit);
            }
            ProcessTerm::Choice(l, r) => {
                l.for_each_name(visit);
                r.for_each_name(visit);
            }
            ProcessTerm::Parallel(l, sync, r) => {
                sync.iter().for_each(|n| visit(n));
                l.for_each_name(visit);
                r.for_each_name(visit);
            }
            ProcessTerm::Hide(body, hidden) => {
                hidden.iter().for_each(|n| visit(n));
                body.for_each_name(visit);
            }
        }
    }
}

/// Identity of process terms as LTS states: syntactic equality after the
/// set canonicalization performed at construction time.
pub fn structurally_equal(a: &ProcessTerm, b: &ProcessTerm) -> bool {
    a == b
}

// Binding strength, loosest first. Matches the parser's grammar levels.
const PREC_CHOICE: u8 = 0;
const PREC_PAR: u8 = 1;
const PREC_PREFIX: u8 = 2;
const PREC_ATOM: u8 = 3;

fn precedence(t: &ProcessTerm) -> u8 {
    match t {
        ProcessTerm::Choice(..) => PREC_CHOICE,
        ProcessTerm::Parallel(..) => PREC_PAR,
        ProcessTerm::Prefix(..) => PREC_PREFIX,
        ProcessTerm::Nil | ProcessTerm::Const(_) | ProcessTerm::Hide(..) => PREC_ATOM,
    }
}

fn write_at(f: &mut fmt::Formatter<'_>, t: &ProcessTerm, min: u8) -> fmt::Result {
    if precedence(t) < min {
        write!(f, "(")?;
        write_term(f, t)?;
        write!(f, ")")
    } else {
        write_term(f, t)
    }
}

fn write_names(f: &mut fmt::Formatter<'_>, names: &BTreeSet<String>) -> fmt::Result {
    let mut first = true;
    for name in names {
        if !first {
            write!(f, ",")?;
        }
        first = false;
        f.write_str(name)?;
    }
    Ok(())
}

fn write_term(f: &mut fmt::Formatter<'_>, t: &ProcessTerm) -> fmt::Result {
    match t {
        ProcessTerm::Nil => write!(f, "0"),
        ProcessTerm::Const(name) => f.write_str(name),
        ProcessTerm::Prefix(action, cont) => {
            write!(f, "{action} . ")?;
            write_at(f, cont, PREC_PREFIX)
        }
        // choice := par { "+" par }, nested to the right
        ProcessTerm::Choice(l, r) => {
            write_at(f, l, PREC_PAR)?;
            write!(f, " + ")?;
            write_at(f, r, PREC_CHOICE)
        }
        // par := prefix { "||[S]" prefix }, nested to the left
        ProcessTerm::Parallel(l, sync, r) => {
            write_at(f, l, PREC_PAR)?;
            write!(f, " ||[")?;
            write_names(f, sync)?;
            write!(f, "] ")?;
            write_at(f, r, PREC_PREFIX)
        }
        ProcessTerm::Hide(body, hidden) => {
            write_at(f, body, PREC_ATOM)?;
            write!(f, " \\ {{")?;
            write_names(f, hidden)?;
            write!(f, "}}")
        }
    }
}

impl fmt::Display for ProcessTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_term(f, self)
    }
}

/// Renders a term in the concrete model syntax.
pub fn render_term(t: &ProcessTerm) -> String {
    t.to_string()
}

/// Named process definitions plus the designated root.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Environment {
    defs: IndexMap<String, ProcessTerm>,
    root: String,
}

impl Environment {
    pub fn new(defs: IndexMap<String, ProcessTerm>, root: impl Into<String>) -> Self {
        Environment { defs, root: root.into() }
    }

    /// Builds an environment from ordered definitions; the root is named explicitly.
    pub fn from_defs<N: Into<String>>(
        defs: impl IntoIterator<Item = (N, ProcessTerm)>,
        root: impl Into<String>,
    ) -> Self {
        let defs = defs.into_iter().map(|(n, t)| (n.into(), t)).collect();
        Environment::new(defs, root)
    }

    pub fn root(&self) -> &str {
        &self.root
    }

    pub fn defs(&self) -> &IndexMap<String, ProcessTerm> {
        &self.defs
    }

    pub fn get(&self, name: &str) -> Option<&ProcessTerm> {
        self.defs.get(name)
    }

    /// The same definitions with a different root.
    pub fn with_root(&self, root: impl Into<String>) -> Self {
        Environment { defs: self.defs.clone(), root: root.into() }
    }

    /// Renders the environment as model-file text (definitions in order,
    /// with a `root` directive when the root is not the first definition).
    pub fn render(&self) -> String {
        let mut out = String::new();
        if self.defs.get_index_of(&self.root) != Some(0) {
            out.push_str(&format!("root {};\n", self.root));
        }
        for (name, body) in &self.defs {
            out.push_str(&format!("{name} = {body};\n"));
        }
        out
    }
}

/// A single well-formedness violation found by [`validate_environment`].
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum EnvDiagnostic {
    #[error("definition `{definition}` refers to undefined constant `{name}`")]
    UndefinedConstant { definition: String, name: String },
    #[error("definition `{definition}` is unguarded: recursion through {cycle:?} crosses no action prefix")]
    UnguardedRecursion { definition: String, cycle: Vec<String> },
    #[error("root `{0}` is not defined")]
    UndefinedRoot(String),
    #[error("definition `{definition}` uses invalid action name `{name}`")]
    InvalidName { definition: String, name: String },
}

impl EnvDiagnostic {
    /// The definition the diagnostic is about (the root name for a missing root).
    pub fn definition(&self) -> &str {
        match self {
            EnvDiagnostic::UndefinedConstant { definition, .. }
            | EnvDiagnostic::UnguardedRecursion { definition, .. }
            | EnvDiagnostic::InvalidName { definition, .. } => definition,
            EnvDiagnostic::UndefinedRoot(root) => root,
        }
    }
}

/// Checks that every constant is defined and that recursion is guarded.
/// An empty result means the environment is well formed.
pub fn validate_environment(env: &Environment) -> Vec<EnvDiagnostic> {
    let mut diags = Vec::new();
    if !env.defs.contains_key(&env.root) {
        diags.push(EnvDiagnostic::UndefinedRoot(env.root.clone()));
    }
    for (definition, body) in &env.defs {
        let mut seen = HashSet::new();
        body.for_each_constant(&mut |name| {
            if !env.defs.contains_key(name) && seen.insert(name.to_string()) {
                diags.push(EnvDiagnostic::UndefinedConstant {
                    definition: definition.clone(),
                    name: name.to_string(),
                });
            }
        });
        let mut bad = BTreeSet::new();
        body.for_each_name(&mut |name| {
            if name == TAU || !is_identifier(name) {
                bad.insert(name.to_string());
            }
        });
        for name in bad {
            diags.push(EnvDiagnostic::InvalidName { definition: definition.clone(), name });
        }
    }

    // Unguarded dependency graph over defined names; any cycle is an error.
    let index: HashMap<&str, usize> =
        env.defs.keys().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
    let edges: Vec<Vec<usize>> = env
        .defs
        .values()
        .map(|body| {
            let mut names = Vec::new();
            body.unguarded_constants(&mut names);
            let mut targets: Vec<usize> =
                names.iter().filter_map(|n| index.get(n.as_str()).copied()).collect();
            targets.sort_unstable();
            targets.dedup();
            targets
        })
        .collect();
    let names: Vec<&String> = env.defs.keys().collect();
    for start in 0..names.len() {
        if let Some(cycle) = find_cycle_through(start, &edges) {
            diags.push(EnvDiagnostic::UnguardedRecursion {
                definition: names[start].clone(),
                cycle: cycle.into_iter().map(|i| names[i].clone()).collect(),
            });
        }
    }
    diags
}

/// Shortest cycle from `start` back to itself, by BFS over `edges`.
fn find_cycle_through(start: usize, edges: &[Vec<usize>]) -> Option<Vec<usize>> {
    let mut parent: Vec<Option<usize>> = vec![None; edges.len()];
    let mut visited = vec![false; edges.len()];
    let mut queue = std::collections::VecDeque::new();
    queue.push_back(start);
    while let Some(node) = queue.pop_front() {
        for &next in &edges[node] {
            if next == start {
                let mut path = vec![node];
                let mut cur = node;
                while let Some(p) = parent[cur] {
                    path.push(p);
                    cur = p;
                }
                path.reverse();
                if path[0] != start {
                    path.insert(0, start);
                }
                path.push(start);
                return Some(path);
            }
            if !visited[next] {
                visited[next] = true;
                parent[next] = Some(node);
                queue.push_back(next);
            }
        }
    }
    None
}
