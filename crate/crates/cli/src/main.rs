//! `syncpat`: steps, conflicts, synchronisation patterns and success checks
//! for process-calculus term files.

mod corpus;
mod view;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use syncpat::analysis::{decompose, degree_of_distributability};
use syncpat::oracle::{self, EnumSpec, LemmaReport};
use syncpat::parser::{parse_file, render};
use syncpat::patterns::Analysis;
use syncpat::reachability::{self, Verdict, DEFAULT_STATE_LIMIT};
use syncpat::syntax::has_success;
use syncpat::{Calculus, Term};

#[derive(Parser)]
#[command(name = "syncpat", version, about = "Synchronisation patterns in process calculi")]
struct Cli {
    /// Emit JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
    /// Exploration bound (states) for success checks.
    #[arg(long, global = true, env = "SYNCPAT_STATE_LIMIT", default_value_t = DEFAULT_STATE_LIMIT)]
    state_limit: usize,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Echo the canonical form of a term.
    Parse { file: PathBuf },
    /// List the reduction steps of a term.
    Steps { file: PathBuf },
    /// Pairwise conflict / parallelism matrix of the steps.
    Pairs { file: PathBuf },
    /// Search for the synchronisation patterns M or ⋆.
    Patterns(PatternArgs),
    /// Maximal decomposition into distributable components.
    Decompose {
        file: PathBuf,
        /// Unfold top-level replications this many times first.
        #[arg(long, default_value_t = 0)]
        unfold: usize,
    },
    /// Success predicates.
    Success(SuccessArgs),
    /// Check a directory of term files against its manifest.json.
    Corpus {
        dir: PathBuf,
        /// Rewrite manifest.json from the current results.
        #[arg(long)]
        regen: bool,
    },
    /// Bounded exhaustive lemma checks.
    Oracle(OracleArgs),
}

#[derive(Args)]
struct PatternArgs {
    file: PathBuf,
    #[arg(long, conflicts_with = "great_m", required_unless_present = "great_m")]
    m: bool,
    #[arg(long)]
    great_m: bool,
    /// Admit asymmetric conflicts.
    #[arg(long)]
    allow_asymmetric: bool,
    #[arg(long)]
    nonlocal_only: bool,
    /// Write the step graph with the witness steps highlighted.
    #[arg(long, value_name = "OUT")]
    dot: Option<PathBuf>,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct SuccessMode {
    /// May the term reach success?
    #[arg(long)]
    reach: bool,
    /// Does every finite maximal execution reach success?
    #[arg(long)]
    must: bool,
    /// Is success unguarded now?
    #[arg(long)]
    has: bool,
}

#[derive(Args)]
struct SuccessArgs {
    file: PathBuf,
    #[command(flatten)]
    mode: SuccessMode,
}

#[derive(Clone, Copy, ValueEnum)]
enum Check {
    Lemma3,
    Corollary5,
    JoinLocality,
}

#[derive(Args)]
struct OracleArgs {
    check: Check,
    #[arg(long, default_value_t = 8)]
    max_operators: usize,
    #[arg(long, default_value_t = 3)]
    names: usize,
    #[arg(long)]
    restriction: bool,
    #[arg(long)]
    replication: bool,
    #[arg(long, default_value = "ma")]
    calculus: String,
    /// Worker threads (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
    /// Term directory for join-locality (its join files are checked).
    #[arg(long, default_value = "corpus")]
    corpus: PathBuf,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}:{source}")]
    Parse { path: String, source: syncpat::parser::ParseError },
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Core(#[from] syncpat::Error),
}

/// Exit statuses: 0 success, 1 a check failed, 2 bad input.
const CHECK_FAILED: u8 = 1;
const INPUT_ERROR: u8 = 2;

pub fn read_term(path: &Path) -> Result<Term, CliError> {
    let text =
        std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.display().to_string(), source })?;
    parse_file(&text).map_err(|source| CliError::Parse { path: path.display().to_string(), source })
}

/// Pretty JSON carrying the schema version.
pub fn emit_json<T: Serialize>(body: &T) -> String {
    let mut v = json!({ "schema": 1 });
    if let serde_json::Value::Object(m) = serde_json::to_value(body).expect("serialisable") {
        v.as_object_mut().unwrap().extend(m);
    }
    serde_json::to_string_pretty(&v).expect("serialisable")
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(CHECK_FAILED),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(INPUT_ERROR)
        }
    }
}

/// Ok(false) means a check ran and failed.
fn run(cli: &Cli) -> Result<bool, CliError> {
    match &cli.cmd {
        Cmd::Parse { file } => {
            let t = read_term(file)?;
            let canon = syncpat::congruence::canonicalize(&t);
            if cli.json {
                println!(
                    "{}",
                    emit_json(&json!({ "calculus": t.calculus, "term": render(&t), "canonical": render(&canon) }))
                );
            } else {
                println!("{}", render(&canon));
            }
        }
        Cmd::Steps { file } => {
            let t = read_term(file)?;
            let an = Analysis::new(&t);
            let steps = view::steps(&an);
            if cli.json {
                println!("{}", emit_json(&json!({ "calculus": t.calculus, "term": render(&t), "steps": steps })));
            } else if steps.is_empty() {
                println!("no steps");
            } else {
                for s in &steps {
                    println!("{s}");
                }
            }
        }
        Cmd::Pairs { file } => {
            let t = read_term(file)?;
            let an = Analysis::new(&t);
            let pairs: Vec<_> = an.matrix.pairs().cloned().collect();
            if cli.json {
                println!("{}", emit_json(&json!({ "calculus": t.calculus, "term": render(&t), "pairs": pairs })));
            } else {
                for r in &pairs {
                    let extra = match &r.kind {
                        syncpat::analysis::PairKind::ConflictAsymmetric { disablers } => {
                            format!(" disablers={disablers:?}")
                        }
                        _ => String::new(),
                    };
                    println!("{} {} {}{extra}", r.first, r.second, r.kind.name());
                }
            }
        }
        Cmd::Patterns(args) => patterns(cli, args)?,
        Cmd::Decompose { file, unfold } => {
            let t = read_term(file)?;
            let d = decompose(&t, *unfold);
            let components: Vec<String> = d.components.iter().map(render).collect();
            let degree = degree_of_distributability(&t);
            if cli.json {
                println!(
                    "{}",
                    emit_json(&json!({
                        "calculus": t.calculus,
                        "term": render(&t),
                        "unfold": unfold,
                        "components": components,
                        "degree": degree,
                    }))
                );
            } else {
                for c in &components {
                    println!("{c}");
                }
                println!("degree: {}", serde_json::to_value(degree).unwrap());
            }
        }
        Cmd::Success(args) => {
            let t = read_term(&args.file)?;
            let (mode, verdict) = if args.mode.has {
                ("has", Verdict::from(has_success(&t)))
            } else if args.mode.reach {
                ("reach", reachability::reach_success(&t, cli.state_limit))
            } else {
                ("must", reachability::must_reach_success_finite(&t, cli.state_limit))
            };
            if cli.json {
                println!(
                    "{}",
                    emit_json(&json!({
                        "term": render(&t),
                        "mode": mode,
                        "state_limit": cli.state_limit,
                        "verdict": verdict,
                    }))
                );
            } else {
                println!("{}", verdict.name());
            }
        }
        Cmd::Corpus { dir, regen } => return corpus::run(dir, *regen, cli.json, cli.state_limit),
        Cmd::Oracle(args) => return oracle_cmd(cli, args),
    }
    Ok(true)
}

fn patterns(cli: &Cli, args: &PatternArgs) -> Result<(), CliError> {
    let t = read_term(&args.file)?;
    let an = Analysis::new(&t);
    let (pattern, witnesses, highlight) = if args.m {
        let ws = an.find_m(args.allow_asymmetric, args.nonlocal_only);
        let hl: Vec<usize> = ws.iter().flat_map(|w| [w.a, w.b, w.c]).collect();
        ("M", serde_json::to_value(&ws).unwrap(), hl)
    } else {
        let ws = an.find_great_m(args.allow_asymmetric, args.nonlocal_only);
        let hl: Vec<usize> = ws.iter().flat_map(|w| w.cycle).collect();
        ("GREAT_M", serde_json::to_value(&ws).unwrap(), hl)
    };
    if let Some(out) = &args.dot {
        std::fs::write(out, an.to_dot(&highlight))
            .map_err(|source| CliError::Io { path: out.display().to_string(), source })?;
    }
    if cli.json {
        println!(
            "{}",
            emit_json(&json!({
                "calculus": t.calculus,
                "term": render(&t),
                "pattern": pattern,
                "allow_asymmetric": args.allow_asymmetric,
                "nonlocal_only": args.nonlocal_only,
                "steps": view::steps(&an),
                "witnesses": witnesses,
            }))
        );
    } else {
        let ws = witnesses.as_array().unwrap();
        println!("{} {pattern} witness(es)", ws.len());
        for w in ws {
            println!("{w}");
        }
    }
    Ok(())
}

fn oracle_cmd(cli: &Cli, args: &OracleArgs) -> Result<bool, CliError> {
    if let Some(n) = args.jobs {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError::Input(e.to_string()))?;
    }
    let calculus = Calculus::from_id(&args.calculus)
        .ok_or_else(|| CliError::Input(format!("unknown calculus `{}`", args.calculus)))?;
    let spec = EnumSpec {
        max_operators: args.max_operators,
        name_pool: args.names,
        allow_restriction: args.restriction,
        allow_replication: args.replication,
        calculus,
    };
    if spec.name_pool == 0 || spec.name_pool > 8 {
        return Err(CliError::Input("--names must be between 1 and 8".into()));
    }
    let (check, report): (&str, LemmaReport) = match args.check {
        Check::Lemma3 => ("lemma3", oracle::check_lemma3(&spec)?),
        Check::Corollary5 => ("corollary5", oracle::check_corollary_unique_names(&spec)?),
        Check::JoinLocality => {
            let terms = corpus::join_terms(&args.corpus)?;
            ("join-locality", oracle::check_join_locality(&terms)?)
        }
    };
    let pass = report.violations.is_empty();
    if cli.json {
        let spec_json = match args.check {
            Check::JoinLocality => json!({ "corpus": args.corpus.display().to_string() }),
            _ => serde_json::to_value(&spec).unwrap(),
        };
        println!("{}", emit_json(&json!({ "check": check, "spec": spec_json, "report": report, "pass": pass })));
    } else {
        println!("{check}: {}", report.banner);
        println!("terms checked:   {}", report.terms_checked);
        println!("shapes analysed: {}", report.shapes_analysed);
        println!("witnesses found: {}", report.witnesses_found);
        println!("violations:      {}", report.violations.len());
        for v in &report.violations {
            println!("  {} {:?}", v.term, v.witness);
        }
        eprintln!("wall time: {:.1?}", report.wall_time);
    }
    Ok(pass)
}
