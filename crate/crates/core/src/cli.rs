//! Command-line front end. [`run`] does all the work and reports what it
//! did; `main` only maps the report to a process exit code.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::aut::{parse_aut, write_aut, write_dot, write_dot_labelled};
use crate::casestudies::Corpus;
use crate::equivalence::{check_equivalence, minimize_lts, partition_for, Kind, Outcome};
use crate::hml::evaluate_formula;
use crate::parser::{parse_formula, parse_model_file, ModelFile};
use crate::semantics::{build_lts, Lts, DEFAULT_MAX_STATES};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunReport {
    pub command: String,
    pub verdict: String,
    pub artifacts_written: Vec<PathBuf>,
    pub elapsed_ms: u128,
    /// 0 success / holds / equivalent, 1 fails / inequivalent, 2 input error.
    pub exit_code: i32,
}

#[derive(Parser, Debug)]
#[command(name = "bisimkit", version, about = "Process-algebra models: LTS generation, bisimulation and HML checking")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build the LTS of a model and export it
    Lts {
        model: PathBuf,
        #[arg(long, default_value_t = DEFAULT_MAX_STATES)]
        max_states: usize,
        #[arg(long, value_enum, default_value_t = Format::Aut)]
        format: Format,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Decide strong or weak bisimilarity of two models
    Bisim {
        model1: PathBuf,
        model2: PathBuf,
        #[command(flatten)]
        opts: EquivOpts,
        /// Write the union LTS as DOT, colored by equivalence class
        #[arg(long)]
        witness: Option<PathBuf>,
    },
    /// Evaluate an HML formula at the initial state
    Check {
        model: PathBuf,
        #[command(flatten)]
        what: FormulaSource,
        #[arg(long, default_value_t = DEFAULT_MAX_STATES)]
        max_states: usize,
    },
    /// Export the quotient by strong or weak bisimilarity
    Minimize {
        model: PathBuf,
        #[command(flatten)]
        opts: EquivOpts,
        #[arg(long, value_enum, default_value_t = Format::Aut)]
        format: Format,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Print only a formula distinguishing two models
    Diff {
        model1: PathBuf,
        model2: PathBuf,
        #[command(flatten)]
        opts: EquivOpts,
    },
    /// Run the case-study corpus
    Corpus {
        #[command(subcommand)]
        action: CorpusAction,
    },
}

#[derive(Args, Debug)]
struct EquivOpts {
    #[arg(long)]
    kind: Kind,
    #[arg(long, default_value_t = DEFAULT_MAX_STATES)]
    max_states: usize,
}

#[derive(Args, Debug)]
#[group(required = true, multiple = false)]
struct FormulaSource {
    #[arg(long)]
    formula: Option<String>,
    /// Name of a property declared in the model file
    #[arg(long)]
    property: Option<String>,
}

#[derive(Subcommand, Debug)]
enum CorpusAction {
    /// Run every case study, or only NAME
    Run {
        name: Option<String>,
        /// Read the corpus from a directory instead of the built-in one
        #[arg(long)]
        dir: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Aut,
    Dot,
}

/// An input failure: reported as `error: ...` with exit code 2.
struct Failure(String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

struct Done {
    verdict: String,
    exit_code: i32,
    artifacts: Vec<PathBuf>,
}

fn done(verdict: impl Into<String>, exit_code: i32, artifacts: Vec<PathBuf>) -> Done {
    Done { verdict: verdict.into(), exit_code, artifacts }
}

enum Loaded {
    Model(ModelFile),
    Aut(Lts),
}

fn load(path: &Path) -> Result<Loaded, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure(format!("{}: {e}", path.display())))?;
    if path.extension().and_then(|e| e.to_str()) == Some("aut") {
        parse_aut(&text).map(Loaded::Aut).map_err(|e| Failure(format!("{}:{e}", path.display())))
    } else {
        parse_model_file(&text).map(Loaded::Model).map_err(|d| Failure(format!("{}:{d}", path.display())))
    }
}

fn load_lts(path: &Path, max_states: usize) -> Result<Lts, Failure> {
    match load(path)? {
        Loaded::Aut(lts) => Ok(lts),
        Loaded::Model(m) => build_lts(&m.env, max_states).map_err(|e| Failure(format!("{}: {e}", path.display()))),
    }
}

fn export(lts: &Lts, format: Format) -> Result<String, Failure> {
    match format {
        Format::Aut => Ok(write_aut(lts)?),
        Format::Dot => Ok(write_dot(lts, &[0], None)),
    }
}

fn write_file(path: &Path, text: &str) -> Result<PathBuf, Failure> {
    std::fs::write(path, text).map_err(|e| Failure(format!("{}: {e}", path.display())))?;
    Ok(path.to_path_buf())
}

fn execute(cmd: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<Done, Failure> {
    match cmd {
        Command::Lts { model, max_states, format, output } => {
            let lts = load_lts(&model, max_states)?;
            let text = export(&lts, format)?;
            let verdict = format!("{} states, {} transitions", lts.state_count(), lts.transition_count());
            match output {
                Some(path) => {
                    let written = write_file(&path, &text)?;
                    writeln!(out, "{verdict}")?;
                    Ok(done(verdict, 0, vec![written]))
                }
                None => {
                    out.write_all(text.as_bytes())?;
                    Ok(done(verdict, 0, vec![]))
                }
            }
        }
        Command::Bisim { model1, model2, opts, witness } => {
            let a = load_lts(&model1, opts.max_states)?;
            let b = load_lts(&model2, opts.max_states)?;
            let verdict = check_equivalence(&a, &b, opts.kind);
            let mut artifacts = Vec::new();
            if let Some(path) = witness {
                let (union, offset) = a.disjoint_union(&b);
                let partition = match &verdict.outcome {
                    Outcome::Equivalent { witness } => witness.clone(),
                    Outcome::Inequivalent { .. } => partition_for(&union, opts.kind),
                };
                let name = |s: usize| if s < offset { a.state_label(s) } else { b.state_label(s - offset) };
                let dot = write_dot_labelled(&union, &[0, offset], Some(&partition), &name);
                artifacts.push(write_file(&path, &dot)?);
            }
            match &verdict.outcome {
                Outcome::Equivalent { .. } => {
                    writeln!(out, "equivalent")?;
                    Ok(done("equivalent", 0, artifacts))
                }
                Outcome::Inequivalent { distinguishing } => {
                    writeln!(out, "not equivalent")?;
                    writeln!(out, "distinguishing formula: {distinguishing}")?;
                    Ok(done("not equivalent", 1, artifacts))
                }
            }
        }
        Command::Check { model, what, max_states } => {
            let (lts, formula) = match (load(&model)?, what.formula, what.property) {
                (loaded, Some(text), _) => {
                    let formula =
                        parse_formula(&text).map_err(|d| Failure(format!("<formula>:{d}")))?;
                    let lts = match loaded {
                        Loaded::Aut(lts) => lts,
                        Loaded::Model(m) => build_lts(&m.env, max_states)
                            .map_err(|e| Failure(format!("{}: {e}", model.display())))?,
                    };
                    (lts, formula)
                }
                (Loaded::Model(m), None, Some(name)) => {
                    let p = m.property(&name).ok_or_else(|| {
                        Failure(format!("{}: no property named `{name}`", model.display()))
                    })?;
                    let formula = p.formula.clone();
                    let lts = build_lts(&m.env, max_states)
                        .map_err(|e| Failure(format!("{}: {e}", model.display())))?;
                    (lts, formula)
                }
                (Loaded::Aut(_), None, Some(_)) => {
                    return Err(Failure(format!("{}: .aut files declare no properties", model.display())))
                }
                (_, None, None) => unreachable!("clap requires one of --formula and --property"),
            };
            let evaluation = evaluate_formula(&lts, 0, &formula)?;
            if evaluation.holds {
                writeln!(out, "holds")?;
                Ok(done("holds", 0, vec![]))
            } else {
                writeln!(out, "fails")?;
                let label = |s: usize| lts.state_label(s);
                out.write_all(evaluation.trace.render(&label).as_bytes())?;
                Ok(done("fails", 1, vec![]))
            }
        }
        Command::Minimize { model, opts, format, output } => {
            let lts = load_lts(&model, opts.max_states)?;
            let quotient = minimize_lts(&lts, opts.kind);
            let written = write_file(&output, &export(&quotient, format)?)?;
            let verdict = format!(
                "{} states reduced to {} ({} bisimilarity)",
                lts.state_count(),
                quotient.state_count(),
                opts.kind
            );
            writeln!(out, "{verdict}")?;
            Ok(done(verdict, 0, vec![written]))
        }
        Command::Diff { model1, model2, opts } => {
            let a = load_lts(&model1, opts.max_states)?;
            let b = load_lts(&model2, opts.max_states)?;
            match check_equivalence(&a, &b, opts.kind).outcome {
                Outcome::Equivalent { .. } => {
                    writeln!(err, "error: models are {}ly bisimilar; no distinguishing formula exists", opts.kind)?;
                    Ok(done("equivalent", 0, vec![]))
                }
                Outcome::Inequivalent { distinguishing } => {
                    writeln!(out, "{distinguishing}")?;
                    Ok(done("not equivalent", 1, vec![]))
                }
            }
        }
        Command::Corpus { action: CorpusAction::Run { name, dir } } => {
            let corpus = match dir {
                Some(dir) => Corpus::load_dir(&dir)?,
                None => Corpus::embedded(),
            };
            let report = corpus.run(name.as_deref())?;
            write!(out, "{report}")?;
            let verdict = format!("{}/{} checks passed", report.passed(), report.results.len());
            Ok(done(verdict, if report.all_passed() { 0 } else { 1 }, vec![]))
        }
    }
}

fn command_name(cmd: &Command) -> &'static str {
    match cmd {
        Command::Lts { .. } => "lts",
        Command::Bisim { .. } => "bisim",
        Command::Check { .. } => "check",
        Command::Minimize { .. } => "minimize",
        Command::Diff { .. } => "diff",
        Command::Corpus { .. } => "corpus run",
    }
}

/// Parses `argv` (including the program name) and runs the command.
/// Results go to `out`, diagnostics to `err`.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> RunReport
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let start = Instant::now();
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let informational = !e.use_stderr();
            let _ = if informational { write!(out, "{e}") } else { write!(err, "{e}") };
            return RunReport {
                command: String::new(),
                verdict: if informational { "help".into() } else { "usage error".into() },
                artifacts_written: vec![],
                elapsed_ms: start.elapsed().as_millis(),
                exit_code: if informational { 0 } else { 2 },
            };
        }
    };
    let command = command_name(&cli.command).to_string();
    let (verdict, exit_code, artifacts_written) = match execute(cli.command, out, err) {
        Ok(o) => (o.verdict, o.exit_code, o.artifacts),
        Err(Failure(message)) => {
            let _ = writeln!(err, "error: {message}");
            ("error".to_string(), 2, vec![])
        }
    };
    RunReport { command, verdict, artifacts_written, elapsed_ms: start.elapsed().as_millis(), exit_code }
}
