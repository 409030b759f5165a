//! Command-line front end. Batch-oriented: every command reads term files
//! (UTF-8, one term per file, `#` line comments) and reports through stdout
//! plus a stable exit code:
//!
//! 0 success / equivalent / theorem instance holds
//! 1 syntax, well-formedness or I/O error
//! 2 inequivalent / theorem instance fails
//! 3 inconclusive: the state bound truncated an exploration
//! 4 class violation: the requested translation is undefined for the term

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use markcalc::bisim::{equivalent_it, equivalent_ot, OtVariant, Verdict};
use markcalc::encode::{gamma, EncodeError};
use markcalc::mlts::{
    self, build, export_dot, export_json, extract_ctmc, BuildError, Mlts, DEFAULT_MAX_STATES,
    MAX_STATES_ENV,
};
use markcalc::parser::{parse_it_spanned, parse_ot_spanned, print_ot, SpanTree, TermSyntax};
use markcalc::semantics::{it_stepper, ot_stepper, classify_ot, RateComposer};
use markcalc::terms::{
    check_well_formed_it, check_well_formed_ot, classify_it, Calculus, ItTerm, OtTerm,
    WellFormedReport,
};

const EXIT_ERROR: u8 = 1;
const EXIT_INEQUIVALENT: u8 = 2;
const EXIT_INCONCLUSIVE: u8 = 3;
const EXIT_CLASS_VIOLATION: u8 = 4;

#[derive(Parser)]
#[command(
    name = "markcalc",
    version,
    about = "Workbench for integrated-time and orthogonal-time Markovian process calculi"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CalcArg {
    It,
    Ot,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OtimesArg {
    Product,
    Min,
    Sum,
}

impl From<OtimesArg> for RateComposer {
    fn from(a: OtimesArg) -> RateComposer {
        match a {
            OtimesArg::Product => RateComposer::Product,
            OtimesArg::Min => RateComposer::Min,
            OtimesArg::Sum => RateComposer::Sum,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum VariantArg {
    Lazy,
    Eager,
    Mp,
}

impl From<VariantArg> for OtVariant {
    fn from(a: VariantArg) -> OtVariant {
        match a {
            VariantArg::Lazy => OtVariant::Lazy,
            VariantArg::Eager => OtVariant::Eager,
            VariantArg::Mp => OtVariant::MaxProgress,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Dot,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a term file and echo its canonical form.
    Parse {
        #[arg(long, value_enum)]
        calculus: CalcArg,
        file: PathBuf,
    },
    /// Build the labeled multitransition system of a term.
    Lts {
        #[arg(long, value_enum)]
        calculus: CalcArg,
        /// Rate composer for synchronizations (integrated time only).
        #[arg(long, value_enum, default_value = "product")]
        otimes: OtimesArg,
        /// State bound; overrides MARKCALC_MAX_STATES and the built-in
        /// default of 10000.
        #[arg(long)]
        max_states: Option<usize>,
        #[arg(long, value_enum, default_value = "json")]
        format: FormatArg,
        file: PathBuf,
    },
    /// Decide Markovian bisimilarity of two terms.
    Bisim {
        #[arg(long, value_enum)]
        calculus: CalcArg,
        /// Required for the orthogonal-time calculus.
        #[arg(long, value_enum)]
        variant: Option<VariantArg>,
        #[arg(long, value_enum, default_value = "product")]
        otimes: OtimesArg,
        #[arg(long)]
        max_states: Option<usize>,
        /// Batch mode: a file of `FILE1 FILE2` lines checked pair by pair.
        #[arg(long)]
        pairs: Option<PathBuf>,
        files: Vec<PathBuf>,
    },
    /// Translate an integrated-time term into the orthogonal-time calculus.
    Encode {
        #[arg(long, value_enum)]
        variant: VariantArg,
        file: PathBuf,
    },
    /// Report the class flags of a term as JSON.
    Classify {
        #[arg(long, value_enum)]
        calculus: CalcArg,
        #[arg(long)]
        max_states: Option<usize>,
        file: PathBuf,
    },
    /// Check one instance of the equivalence-preservation theorem: compare
    /// the integrated-time verdict on a pair with the orthogonal-time
    /// verdict on its translations.
    CheckPreservation {
        #[arg(long, value_enum)]
        variant: VariantArg,
        #[arg(long, value_enum, default_value = "product")]
        otimes: OtimesArg,
        #[arg(long)]
        max_states: Option<usize>,
        /// Batch mode: a file of `FILE1 FILE2` lines checked pair by pair.
        #[arg(long)]
        pairs: Option<PathBuf>,
        files: Vec<PathBuf>,
    },
    /// Extract the rate matrix of the chain underlying an integrated-time
    /// term, as JSON.
    Ctmc {
        #[arg(long, value_enum, default_value = "product")]
        otimes: OtimesArg,
        #[arg(long)]
        max_states: Option<usize>,
        file: PathBuf,
    },
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn error(message: impl Into<String>) -> Failure {
        Failure {
            code: EXIT_ERROR,
            message: message.into(),
        }
    }

    fn with_code(code: u8, message: impl Into<String>) -> Failure {
        Failure {
            code,
            message: message.into(),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("markcalc: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn max_states_setting(flag: Option<usize>) -> Result<usize, Failure> {
    if let Some(n) = flag {
        return Ok(n);
    }
    match std::env::var(MAX_STATES_ENV) {
        Ok(text) => text.trim().parse::<usize>().map_err(|_| {
            Failure::error(format!("{MAX_STATES_ENV} must be a positive integer"))
        }),
        Err(_) => Ok(DEFAULT_MAX_STATES),
    }
}

fn read_file(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path)
        .map_err(|e| Failure::error(format!("{}: {e}", path.display())))
}

fn load_it(path: &Path) -> Result<(ItTerm, SpanTree, String), Failure> {
    let src = read_file(path)?;
    let (term, spans) = parse_it_spanned(&src)
        .map_err(|e| Failure::error(format!("{}: {e}", path.display())))?;
    Ok((term, spans, src))
}

fn load_ot(path: &Path) -> Result<(OtTerm, SpanTree, String), Failure> {
    let src = read_file(path)?;
    let (term, spans) = parse_ot_spanned(&src)
        .map_err(|e| Failure::error(format!("{}: {e}", path.display())))?;
    Ok((term, spans, src))
}

fn demand_well_formed(path: &Path, report: &WellFormedReport) -> Result<(), Failure> {
    if report.is_ok() {
        Ok(())
    } else {
        Err(Failure::error(format!(
            "{}: term is not closed and guarded:\n{report}",
            path.display()
        )))
    }
}

fn load_it_checked(path: &Path) -> Result<(ItTerm, SpanTree, String), Failure> {
    let (term, spans, src) = load_it(path)?;
    demand_well_formed(path, &check_well_formed_it(&term))?;
    Ok((term, spans, src))
}

fn load_ot_checked(path: &Path) -> Result<(OtTerm, SpanTree, String), Failure> {
    let (term, spans, src) = load_ot(path)?;
    demand_well_formed(path, &check_well_formed_ot(&term))?;
    Ok((term, spans, src))
}

fn two_files(files: &[PathBuf]) -> Result<(&Path, &Path), Failure> {
    match files {
        [a, b] => Ok((a, b)),
        _ => Err(Failure::error(
            "expected exactly two term files (or --pairs LISTFILE)",
        )),
    }
}

/// Lines of `FILE1 FILE2`, `#` comments and blank lines skipped.
fn read_pair_list(path: &Path) -> Result<Vec<(PathBuf, PathBuf)>, Failure> {
    let text = read_file(path)?;
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        match (parts.next(), parts.next(), parts.next()) {
            (Some(a), Some(b), None) => out.push((PathBuf::from(a), PathBuf::from(b))),
            _ => {
                return Err(Failure::error(format!(
                    "{}:{}: expected two file names per line",
                    path.display(),
                    lineno + 1
                )))
            }
        }
    }
    Ok(out)
}

fn verdict_exit(v: &Verdict) -> u8 {
    match v {
        Verdict::Equivalent => 0,
        Verdict::Inequivalent(_) => EXIT_INEQUIVALENT,
        Verdict::Inconclusive => EXIT_INCONCLUSIVE,
    }
}

fn verdict_line(v: &Verdict) -> String {
    match v {
        Verdict::Equivalent => "equivalent".to_string(),
        Verdict::Inequivalent(d) => format!("inequivalent: {d}"),
        Verdict::Inconclusive => "inconclusive: the state bound truncated the exploration".into(),
    }
}

fn encode_failure(path: &Path, src: &str, spans: &SpanTree, err: &EncodeError) -> Failure {
    let located = spans
        .lookup(err.path())
        .map(|node| {
            format!(
                " at bytes {} (`{}`)",
                node.span,
                &src[node.span.start..node.span.end]
            )
        })
        .unwrap_or_default();
    Failure::with_code(
        EXIT_CLASS_VIOLATION,
        format!("{}: {err}{located}", path.display()),
    )
}

fn run(command: Command) -> Result<u8, Failure> {
    match command {
        Command::Parse { calculus, file } => {
            match calculus {
                CalcArg::It => {
                    let (term, _, _) = load_it(&file)?;
                    println!("{term}");
                }
                CalcArg::Ot => {
                    let (term, _, _) = load_ot(&file)?;
                    println!("{term}");
                }
            }
            Ok(0)
        }

        Command::Lts {
            calculus,
            otimes,
            max_states,
            format,
            file,
        } => {
            let bound = max_states_setting(max_states)?;
            match calculus {
                CalcArg::It => {
                    let (term, _, _) = load_it_checked(&file)?;
                    let built = build(term, Calculus::It, it_stepper(otimes.into()), bound);
                    emit_system(built, format, Some(RateComposer::from(otimes)))
                }
                CalcArg::Ot => {
                    let (term, _, _) = load_ot_checked(&file)?;
                    let built = build(term, Calculus::Ot, ot_stepper(), bound);
                    emit_system(built, format, None)
                }
            }
        }

        Command::Bisim {
            calculus,
            variant,
            otimes,
            max_states,
            pairs,
            files,
        } => {
            let bound = max_states_setting(max_states)?;
            let composer = RateComposer::from(otimes);
            let variant = match (calculus, variant) {
                (CalcArg::It, None) => None,
                (CalcArg::It, Some(_)) => {
                    return Err(Failure::error(
                        "--variant applies to the orthogonal-time calculus only",
                    ))
                }
                (CalcArg::Ot, Some(v)) => Some(OtVariant::from(v)),
                (CalcArg::Ot, None) => {
                    return Err(Failure::error(
                        "--variant (eager|lazy|mp) is required for --calculus ot",
                    ))
                }
            };
            let pair_list = match &pairs {
                Some(list) => read_pair_list(list)?,
                None => {
                    let (a, b) = two_files(&files)?;
                    vec![(a.to_path_buf(), b.to_path_buf())]
                }
            };
            let batch = pairs.is_some();
            if calculus == CalcArg::It {
                println!("# otimes={composer}");
            }
            let mut worst = 0u8;
            for (left, right) in pair_list {
                let verdict = match calculus {
                    CalcArg::It => {
                        let (t1, _, _) = load_it_checked(&left)?;
                        let (t2, _, _) = load_it_checked(&right)?;
                        equivalent_it(&t1, &t2, composer, bound)
                            .map_err(|e| Failure::error(e.to_string()))?
                    }
                    CalcArg::Ot => {
                        let (q1, _, _) = load_ot_checked(&left)?;
                        let (q2, _, _) = load_ot_checked(&right)?;
                        equivalent_ot(&q1, &q2, variant.unwrap(), bound)
                            .map_err(|e| Failure::error(e.to_string()))?
                    }
                };
                if batch {
                    println!(
                        "{} {}: {}",
                        left.display(),
                        right.display(),
                        verdict_line(&verdict)
                    );
                } else {
                    println!("{}", verdict_line(&verdict));
                }
                worst = worst_exit(worst, verdict_exit(&verdict));
            }
            Ok(worst)
        }

        Command::Encode { variant, file } => {
            let (term, spans, src) = load_it_checked(&file)?;
            let encoded = gamma(variant.into(), &term)
                .map_err(|e| encode_failure(&file, &src, &spans, &e))?;
            println!("{}", print_ot(&encoded));
            Ok(0)
        }

        Command::Classify {
            calculus,
            max_states,
            file,
        } => {
            let bound = max_states_setting(max_states)?;
            let class = match calculus {
                CalcArg::It => {
                    let (term, _, _) = load_it_checked(&file)?;
                    classify_it(&term)
                }
                CalcArg::Ot => {
                    let (term, _, _) = load_ot_checked(&file)?;
                    classify_ot(&term, bound).map_err(|e| match e {
                        markcalc::semantics::OtClassifyError::Truncated { .. } => {
                            Failure::with_code(EXIT_INCONCLUSIVE, e.to_string())
                        }
                        other => Failure::error(other.to_string()),
                    })?
                }
            };
            println!(
                "{}",
                serde_json::to_string_pretty(&class).expect("serializable")
            );
            Ok(0)
        }

        Command::CheckPreservation {
            variant,
            otimes,
            max_states,
            pairs,
            files,
        } => {
            let bound = max_states_setting(max_states)?;
            let composer = RateComposer::from(otimes);
            let variant = OtVariant::from(variant);
            let pair_list = match &pairs {
                Some(list) => read_pair_list(list)?,
                None => {
                    let (a, b) = two_files(&files)?;
                    vec![(a.to_path_buf(), b.to_path_buf())]
                }
            };
            let batch = pairs.is_some();
            println!("# otimes={composer}");
            let mut worst = 0u8;
            for (left, right) in pair_list {
                let (p1, spans1, src1) = load_it_checked(&left)?;
                let (p2, spans2, src2) = load_it_checked(&right)?;
                let q1 = gamma(variant, &p1)
                    .map_err(|e| encode_failure(&left, &src1, &spans1, &e))?;
                let q2 = gamma(variant, &p2)
                    .map_err(|e| encode_failure(&right, &src2, &spans2, &e))?;
                let it_verdict = equivalent_it(&p1, &p2, composer, bound)
                    .map_err(|e| Failure::error(e.to_string()))?;
                let ot_verdict = equivalent_ot(&q1, &q2, variant, bound)
                    .map_err(|e| Failure::error(e.to_string()))?;
                let prefix = if batch {
                    format!("{} {}: ", left.display(), right.display())
                } else {
                    String::new()
                };
                let code = if matches!(it_verdict, Verdict::Inconclusive)
                    || matches!(ot_verdict, Verdict::Inconclusive)
                {
                    println!(
                        "{prefix}IT: {}; OT({variant}): {}; theorem instance INCONCLUSIVE",
                        verdict_word(&it_verdict),
                        verdict_word(&ot_verdict)
                    );
                    EXIT_INCONCLUSIVE
                } else {
                    let holds = it_verdict.is_equivalent() == ot_verdict.is_equivalent();
                    println!(
                        "{prefix}IT: {}; OT({variant}): {}; theorem instance {}",
                        verdict_word(&it_verdict),
                        verdict_word(&ot_verdict),
                        if holds { "HOLDS" } else { "FAILS" }
                    );
                    if holds {
                        0
                    } else {
                        EXIT_INEQUIVALENT
                    }
                };
                worst = worst_exit(worst, code);
            }
            Ok(worst)
        }

        Command::Ctmc {
            otimes,
            max_states,
            file,
        } => {
            let bound = max_states_setting(max_states)?;
            let composer = RateComposer::from(otimes);
            let (term, _, _) = load_it_checked(&file)?;
            let built = build(term, Calculus::It, it_stepper(composer), bound);
            let system = match built {
                Ok(m) => m,
                Err(BuildError::Truncated(_)) => {
                    return Err(Failure::with_code(
                        EXIT_INCONCLUSIVE,
                        format!("state bound of {bound} reached; no chain extracted"),
                    ))
                }
                Err(BuildError::Semantics(e)) => return Err(Failure::error(e.to_string())),
            };
            let matrix =
                extract_ctmc(&system).map_err(|e| Failure::error(e.to_string()))?;
            #[derive(Serialize)]
            struct CtmcJson {
                otimes: String,
                states: Vec<String>,
                matrix: Vec<Vec<String>>,
            }
            let doc = CtmcJson {
                otimes: composer.to_string(),
                states: system.states.iter().map(|s| s.to_string()).collect(),
                matrix: matrix
                    .iter()
                    .map(|row| row.iter().map(|r| r.to_string()).collect())
                    .collect(),
            };
            println!(
                "{}",
                serde_json::to_string_pretty(&doc).expect("serializable")
            );
            Ok(0)
        }
    }
}

fn worst_exit(a: u8, b: u8) -> u8 {
    // Severity order: inconclusive > inequivalent > ok.
    let rank = |c: u8| match c {
        EXIT_INCONCLUSIVE => 2,
        EXIT_INEQUIVALENT => 1,
        _ => 0,
    };
    if rank(b) > rank(a) {
        b
    } else {
        a
    }
}

fn verdict_word(v: &Verdict) -> &'static str {
    match v {
        Verdict::Equivalent => "equivalent",
        Verdict::Inequivalent(_) => "inequivalent",
        Verdict::Inconclusive => "inconclusive",
    }
}

fn emit_system<S: TermSyntax>(
    built: Result<Mlts<S>, BuildError<S>>,
    format: FormatArg,
    composer: Option<RateComposer>,
) -> Result<u8, Failure> {
    let (system, code) = match built {
        Ok(m) => (m, 0),
        Err(mlts::BuildError::Truncated(partial)) => (partial, EXIT_INCONCLUSIVE),
        Err(mlts::BuildError::Semantics(e)) => return Err(Failure::error(e.to_string())),
    };
    match format {
        FormatArg::Json => print!("{}", export_json(&system)),
        FormatArg::Dot => {
            if let Some(c) = composer {
                println!("// otimes={c}");
            }
            print!("{}", export_dot(&system));
        }
    }
    println!();
    Ok(code)
}
