//! Executable corpus: producer-consumer buffers and offline-payment threat
//! models, each with declared checks and expected verdicts.
//!
//! The payment models encode narrative conclusions (who can be blamed,
//! which replays are rejected) as model structure plus checks. Running the
//! corpus shows the encodings are internally consistent; it does not prove
//! anything about real payment protocols.
//!
//! Wallets report their full local history when they reconnect: S reports
//! whom it paid, R reports who paid it.

use std::collections::HashMap;
use std::fmt;
use std::path::{Path, PathBuf};

use indexmap::IndexMap;
use serde::Deserialize;

use crate::equivalence::{check_equivalence, Kind};
use crate::hml::{evaluate_formula, HmlFormula};
use crate::parser::{parse_formula, parse_model_file, ModelFile, SourceDiagnostic};
use crate::semantics::{build_lts, reachable_action_set, Lts, SemanticsError, DEFAULT_MAX_STATES};
use crate::terms::{validate_environment, Action, Environment, ProcessTerm};

const EMBEDDED: &[(&str, &str)] = &[
    ("pc_spec", include_str!("../corpus/pc_spec.pa")),
    ("pc_conc", include_str!("../corpus/pc_conc.pa")),
    ("pc_pipe", include_str!("../corpus/pc_pipe.pa")),
    ("chain1", include_str!("../corpus/chain1.pa")),
    ("attribution_spec", include_str!("../corpus/attribution_spec.pa")),
    ("chain2", include_str!("../corpus/chain2.pa")),
    ("double_spend", include_str!("../corpus/double_spend.pa")),
    ("wallet_spec", include_str!("../corpus/wallet_spec.pa")),
    ("wallet_broken", include_str!("../corpus/wallet_broken.pa")),
    ("torn", include_str!("../corpus/torn.pa")),
    ("torn_spec", include_str!("../corpus/torn_spec.pa")),
    ("torn_norecovery", include_str!("../corpus/torn_norecovery.pa")),
];

const EMBEDDED_MANIFEST: &str = include_str!("../corpus/manifest.toml");

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("{file}:{diag}")]
    Model { file: String, diag: SourceDiagnostic },
    #[error("manifest: {0}")]
    Manifest(#[from] toml::de::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("check `{check}` refers to unknown model `{model}`")]
    UnknownModel { check: String, model: String },
    #[error("check `{check}`: model `{model}` has no definition `{root}`")]
    UnknownRoot { check: String, model: String, root: String },
    #[error("check `{check}`: model `{model}` declares no property `{property}`")]
    UnknownProperty { check: String, model: String, property: String },
    #[error("check `{check}`: manifest expects {manifest} but `{model}` declares {file}")]
    ExpectationMismatch { check: String, model: String, manifest: bool, file: bool },
    #[error("check `{check}`: {message}")]
    BadCheck { check: String, message: String },
    #[error("no case study named `{0}`")]
    UnknownCase(String),
}

#[derive(Debug, thiserror::Error)]
pub enum BuildError {
    #[error("{parameter} must be at least 1, got {value}")]
    OutOfRange { parameter: &'static str, value: usize },
}

/// A model file plus, optionally, a definition to use as root instead of
/// the file's own (`file#Name` in the manifest).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ModelRef {
    pub file: String,
    pub root: Option<String>,
}

impl ModelRef {
    pub fn parse(text: &str) -> Self {
        match text.split_once('#') {
            Some((file, root)) => ModelRef { file: file.to_string(), root: Some(root.to_string()) },
            None => ModelRef { file: text.to_string(), root: None },
        }
    }
}

impl fmt::Display for ModelRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.root {
            Some(root) => write!(f, "{}#{}", self.file, root),
            None => f.write_str(&self.file),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum CheckKind {
    Equivalence { left: ModelRef, right: ModelRef, kind: Kind },
    Formula { model: ModelRef, formula: HmlFormula },
    Reachability { model: ModelRef, action: Action },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub description: String,
    pub kind: CheckKind,
    pub expected: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CaseStudy {
    pub name: String,
    pub model: ModelFile,
    pub checks: Vec<Check>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    #[serde(rename = "case", default)]
    cases: Vec<ManifestCase>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestCase {
    name: String,
    model: String,
    #[serde(rename = "check", default)]
    checks: Vec<ManifestCheck>,
}

#[derive(Deserialize)]
struct ManifestCheck {
    name: String,
    #[serde(default)]
    description: String,
    #[serde(flatten)]
    kind: ManifestKind,
    expected: bool,
}

#[derive(Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum ManifestKind {
    Equivalence { left: String, right: String, kind: String },
    Property { model: String, property: String },
    Formula { model: String, formula: String },
    Reachability { model: String, action: String },
}

/// All corpus models plus the case studies declared over them.
#[derive(Clone, Debug)]
pub struct Corpus {
    models: IndexMap<String, ModelFile>,
    cases: Vec<CaseStudy>,
}

impl Corpus {
    /// The corpus compiled into the binary.
    pub fn embedded() -> Self {
        Corpus::from_sources(EMBEDDED.iter().map(|(n, t)| (n.to_string(), t.to_string())), EMBEDDED_MANIFEST)
            .expect("embedded corpus is valid")
    }

    /// Reads `manifest.toml` and every `*.pa` file in `dir`.
    pub fn load_dir(dir: &Path) -> Result<Self, CorpusError> {
        let io = |path: &Path| {
            let path = path.to_path_buf();
            move |source| CorpusError::Io { path, source }
        };
        let manifest_path = dir.join("manifest.toml");
        let manifest = std::fs::read_to_string(&manifest_path).map_err(io(&manifest_path))?;
        let mut sources = Vec::new();
        for entry in std::fs::read_dir(dir).map_err(io(dir))? {
            let path = entry.map_err(io(dir))?.path();
            if path.extension().and_then(|e| e.to_str()) == Some("pa") {
                let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
                let text = std::fs::read_to_string(&path).map_err(io(&path))?;
                sources.push((stem, text));
            }
        }
        sources.sort();
        Corpus::from_sources(sources, &manifest)
    }

    /// Builds a corpus from (file stem, model text) pairs and manifest text.
    pub fn from_sources(
        sources: impl IntoIterator<Item = (String, String)>,
        manifest: &str,
    ) -> Result<Self, CorpusError> {
        let mut models = IndexMap::new();
        for (name, text) in sources {
            let model = parse_model_file(&text)
                .map_err(|diag| CorpusError::Model { file: format!("{name}.pa"), diag })?;
            models.insert(name, model);
        }
        let manifest: Manifest = toml::from_str(manifest)?;
        let mut corpus = Corpus { models, cases: Vec::new() };
        for case in manifest.cases {
            let model = corpus
                .models
                .get(&case.model)
                .cloned()
                .ok_or_else(|| CorpusError::UnknownModel { check: case.name.clone(), model: case.model.clone() })?;
            let checks = case.checks.into_iter().map(|c| corpus.resolve(c)).collect::<Result<_, _>>()?;
            corpus.cases.push(CaseStudy { name: case.name, model, checks });
        }
        Ok(corpus)
    }

    fn model_ref(&self, check: &str, text: &str) -> Result<ModelRef, CorpusError> {
        let r = ModelRef::parse(text);
        let model = self.models.get(&r.file).ok_or_else(|| CorpusError::UnknownModel {
            check: check.to_string(),
            model: r.file.clone(),
        })?;
        if let Some(root) = &r.root {
            if model.env.get(root).is_none() {
                return Err(CorpusError::UnknownRoot {
                    check: check.to_string(),
                    model: r.file.clone(),
                    root: root.clone(),
                });
            }
        }
        Ok(r)
    }

    fn resolve(&self, c: ManifestCheck) -> Result<Check, CorpusError> {
        let bad = |message: String| CorpusError::BadCheck { check: c.name.clone(), message };
        let kind = match &c.kind {
            ManifestKind::Equivalence { left, right, kind } => CheckKind::Equivalence {
                left: self.model_ref(&c.name, left)?,
                right: self.model_ref(&c.name, right)?,
                kind: kind.parse().map_err(bad)?,
            },
            ManifestKind::Property { model, property } => {
                let model = self.model_ref(&c.name, model)?;
                let p = self.models[&model.file].property(property).ok_or_else(|| CorpusError::UnknownProperty {
                    check: c.name.clone(),
                    model: model.file.clone(),
                    property: property.clone(),
                })?;
                if let Some(file) = p.expected {
                    if file != c.expected {
                        return Err(CorpusError::ExpectationMismatch {
                            check: c.name.clone(),
                            model: model.file.clone(),
                            manifest: c.expected,
                            file,
                        });
                    }
                }
                CheckKind::Formula { formula: p.formula.clone(), model }
            }
            ManifestKind::Formula { model, formula } => CheckKind::Formula {
                model: self.model_ref(&c.name, model)?,
                formula: parse_formula(formula).map_err(|d| bad(d.to_string()))?,
            },
            ManifestKind::Reachability { model, action } => CheckKind::Reachability {
                model: self.model_ref(&c.name, model)?,
                action: Action::observable(action).map_err(|e| bad(e.to_string()))?,
            },
        };
        Ok(Check { name: c.name, description: c.description, kind, expected: c.expected })
    }

    pub fn models(&self) -> &IndexMap<String, ModelFile> {
        &self.models
    }

    pub fn model(&self, name: &str) -> Option<&ModelFile> {
        self.models.get(name)
    }

    pub fn cases(&self) -> &[CaseStudy] {
        &self.cases
    }

    pub fn case(&self, name: &str) -> Option<&CaseStudy> {
        self.cases.iter().find(|c| c.name == name)
    }

    /// The environment a reference denotes.
    pub fn environment(&self, r: &ModelRef) -> Option<Environment> {
        let model = self.models.get(&r.file)?;
        Some(match &r.root {
            Some(root) => model.env.with_root(root.clone()),
            None => model.env.clone(),
        })
    }

    /// Runs the checks of every case (or only `only`) in manifest order.
    pub fn run(&self, only: Option<&str>) -> Result<CorpusReport, CorpusError> {
        let cases: Vec<&CaseStudy> = match only {
            Some(name) => vec![self.case(name).ok_or_else(|| CorpusError::UnknownCase(name.to_string()))?],
            None => self.cases.iter().collect(),
        };
        let mut ltss: HashMap<ModelRef, Result<Lts, SemanticsError>> = HashMap::new();
        let mut results = Vec::new();
        for case in cases {
            for check in &case.checks {
                let actual = self.evaluate(check, &mut ltss);
                results.push(CheckResult {
                    case: case.name.clone(),
                    check: check.name.clone(),
                    expected: check.expected,
                    actual,
                });
            }
        }
        Ok(CorpusReport { results })
    }

    fn evaluate(
        &self,
        check: &Check,
        ltss: &mut HashMap<ModelRef, Result<Lts, SemanticsError>>,
    ) -> Result<bool, String> {
        let mut lts = |r: &ModelRef| -> Result<Lts, String> {
            ltss.entry(r.clone())
                .or_insert_with(|| {
                    let env = self.environment(r).expect("references resolved at load time");
                    build_lts(&env, DEFAULT_MAX_STATES)
                })
                .clone()
                .map_err(|e| format!("{r}: {e}"))
        };
        match &check.kind {
            CheckKind::Equivalence { left, right, kind } => {
                let (a, b) = (lts(left)?, lts(right)?);
                Ok(check_equivalence(&a, &b, *kind).equivalent())
            }
            CheckKind::Formula { model, formula } => {
                let l = lts(model)?;
                evaluate_formula(&l, 0, formula).map(|e| e.holds).map_err(|e| e.to_string())
            }
            CheckKind::Reachability { model, action } => {
                let l = lts(model)?;
                reachable_action_set(&l, 0).map(|s| s.contains(action)).map_err(|e| e.to_string())
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CheckResult {
    pub case: String,
    pub check: String,
    pub expected: bool,
    /// `Err` when the check could not be evaluated.
    pub actual: Result<bool, String>,
}

impl CheckResult {
    pub fn passed(&self) -> bool {
        self.actual == Ok(self.expected)
    }
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let actual = match &self.actual {
            Ok(b) => b.to_string(),
            Err(_) => "error".to_string(),
        };
        let verdict = if self.passed() { "PASS" } else { "FAIL" };
        write!(f, "CHECK {} expected={} actual={actual} {verdict}", self.check, self.expected)?;
        if let Err(e) = &self.actual {
            write!(f, " ({e})")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CorpusReport {
    pub results: Vec<CheckResult>,
}

impl CorpusReport {
    pub fn passed(&self) -> usize {
        self.results.iter().filter(|r| r.passed()).count()
    }

    pub fn all_passed(&self) -> bool {
        self.passed() == self.results.len()
    }

    pub fn result(&self, check: &str) -> Option<&CheckResult> {
        self.results.iter().find(|r| r.check == check)
    }
}

impl fmt::Display for CorpusReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.results {
            writeln!(f, "{r}")?;
        }
        writeln!(f, "{}/{} checks passed", self.passed(), self.results.len())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Style {
    Spec,
    Concurrent,
    Pipeline,
}

impl std::str::FromStr for Style {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "spec" => Ok(Style::Spec),
            "concurrent" => Ok(Style::Concurrent),
            "pipeline" => Ok(Style::Pipeline),
            other => Err(format!("unknown style `{other}` (expected spec, concurrent or pipeline)")),
        }
    }
}

fn act(name: &str) -> Action {
    Action::observable(name).expect("builder uses valid names")
}

fn cst(name: &str) -> ProcessTerm {
    ProcessTerm::constant(name)
}

fn interleave(term: ProcessTerm, copies: usize) -> ProcessTerm {
    (1..copies).fold(term.clone(), |acc, _| ProcessTerm::parallel(acc, Vec::<String>::new(), term.clone()))
}

/// Producer-consumer model with buffer capacity `capacity`, `producers`
/// producers and `consumers` consumers.
///
/// The spec style is the `capacity + 1` state counter (producers and
/// consumers do not change its behaviour). The concurrent style composes
/// independent one-slot buffers; the pipeline style chains them with hidden
/// hand-over actions.
pub fn build_producer_consumer(
    capacity: usize,
    producers: usize,
    consumers: usize,
    style: Style,
) -> Result<ModelFile, BuildError> {
    for (parameter, value) in [("capacity", capacity), ("producers", producers), ("consumers", consumers)] {
        if value < 1 {
            return Err(BuildError::OutOfRange { parameter, value });
        }
    }
    let n = capacity;
    let mut defs: Vec<(String, ProcessTerm)> = Vec::new();
    let system = |buffers: ProcessTerm| {
        let prods = interleave(cst("Prod"), producers);
        let conss = interleave(cst("Cons"), consumers);
        ProcessTerm::parallel(ProcessTerm::parallel(prods, ["deposit"], buffers), ["withdraw"], conss)
    };
    let prod = ("Prod".to_string(), ProcessTerm::prefix(act("deposit"), cst("Prod")));
    let cons = ("Cons".to_string(), ProcessTerm::prefix(act("withdraw"), cst("Cons")));
    match style {
        Style::Spec => {
            let name = |i: usize| format!("ProdCons_{i}_{n}");
            for i in 0..=n {
                let mut alts = Vec::new();
                if i < n {
                    alts.push(ProcessTerm::prefix(act("deposit"), cst(&name(i + 1))));
                }
                if i > 0 {
                    alts.push(ProcessTerm::prefix(act("withdraw"), cst(&name(i - 1))));
                }
                defs.push((name(i), ProcessTerm::choice_of(alts)));
            }
        }
        Style::Concurrent => {
            defs.push((format!("PC_conc_{n}"), system(interleave(cst("Buff"), n))));
            defs.push(prod);
            let buff = ProcessTerm::prefix(act("deposit"), ProcessTerm::prefix(act("withdraw"), cst("Buff")));
            defs.push(("Buff".to_string(), buff));
            defs.push(cons);
        }
        Style::Pipeline => {
            // One buffer per slot; buffer i hands its item to buffer i+1 over
            // a hidden action. Two slots use the LBuff/RBuff/pass names.
            let (names, links): (Vec<String>, Vec<String>) = match n {
                1 => (vec!["Buff".into()], vec![]),
                2 => (vec!["LBuff".into(), "RBuff".into()], vec!["pass".into()]),
                _ => ((1..=n).map(|i| format!("Buff_{i}")).collect(), (1..n).map(|i| format!("pass_{i}")).collect()),
            };
            let mut chain = cst(&names[0]);
            for i in 1..n {
                chain = ProcessTerm::parallel(chain, [links[i - 1].clone()], cst(&names[i]));
            }
            if !links.is_empty() {
                chain = ProcessTerm::hide(chain, links.clone());
            }
            defs.push((format!("PC_pipe_{n}"), system(chain)));
            defs.push(prod);
            for i in 0..n {
                let input = if i == 0 { act("deposit") } else { act(&links[i - 1]) };
                let output = if i + 1 == n { act("withdraw") } else { act(&links[i]) };
                let body = ProcessTerm::prefix(input, ProcessTerm::prefix(output, cst(&names[i])));
                defs.push((names[i].clone(), body));
            }
            defs.push(cons);
        }
    }
    let root = defs[0].0.clone();
    let env = Environment::from_defs(defs, root);
    debug_assert!(validate_environment(&env).is_empty());
    Ok(ModelFile { env, properties: Vec::new() })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChainVariant {
    Chain1,
    Chain2,
}

/// Offline transaction chain with a ledger reconciling the reports of the
/// two online wallets S and R.
pub fn build_offline_chain(variant: ChainVariant) -> CaseStudy {
    let name = match variant {
        ChainVariant::Chain1 => "offline_chain_1",
        ChainVariant::Chain2 => "offline_chain_2",
    };
    embedded_case(name)
}

/// Payer replaying a token against a payee wallet, plus the wallet
/// refinement checks.
pub fn build_double_spend() -> CaseStudy {
    embedded_case("double_spend")
}

/// Payment over a lossy channel with a refund handshake.
pub fn build_torn_transaction() -> CaseStudy {
    embedded_case("torn_transaction")
}

fn embedded_case(name: &str) -> CaseStudy {
    Corpus::embedded().case(name).cloned().expect("case is declared in the embedded manifest")
}
