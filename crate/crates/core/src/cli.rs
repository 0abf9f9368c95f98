//! The `icode` command line.
//!
//! Exit codes: 0 success (rate 1 or 1/2 feasible, or a code was produced),
//! 1 bad input or usage, 2 rate-1/3 infeasible, 3 inconclusive (also: no
//! qualifying contraction, oracle budget exhausted), 4 construction retries
//! exhausted.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::constructor::{construct_rate_third, ConstructConfig, ConstructError};
use crate::contraction::{contract_edge, maximal_contraction, ContractionMap, ContractionPolicy};
use crate::inference::Verdict;
use crate::model::{InstanceFile, MessageSet, Problem};
use crate::oracle::{self, Normalization, OracleConfig, OracleError, DEFAULT_BUDGET};
use crate::report::{render_code, CodeOutput, Report};
use crate::structure::export_dot;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;
pub const EXIT_INCONCLUSIVE: i32 = 3;
pub const EXIT_RETRIES: i32 = 4;

#[derive(Parser, Debug)]
#[command(name = "icode", version, about = "Rate-1/3 analysis and construction for groupcast index coding")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Detect structure and decide rate 1, 1/2, or refute rate 1/3.
    Analyze {
        #[command(flatten)]
        common: Common,
        /// Field size for the rate-1/2 check (default: the instance's hint, else unbounded).
        #[arg(long)]
        q: Option<u32>,
        /// Also try to build a length-3 code when the verdict is inconclusive.
        #[arg(long)]
        construct: bool,
        #[command(flatten)]
        build: BuildArgs,
    },
    /// Build and verify a length-3 code through maximal contraction.
    Construct {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 101)]
        q: u32,
        #[command(flatten)]
        build: BuildArgs,
    },
    /// Exhaustive search for codes over GF(2), GF(3) or GF(5).
    Oracle {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 2)]
        q: u32,
        /// Code length.
        #[arg(long = "L", default_value_t = 3)]
        length: usize,
        /// Subsets to classify, e.g. "2,3,5;1,2,3" (repeatable).
        #[arg(long)]
        subsets: Vec<String>,
        /// Report the smallest feasible length up to --L instead.
        #[arg(long)]
        minrank: bool,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: u64,
        #[arg(long, default_value_t = 1)]
        threads: usize,
        /// Enumerate every assignment instead of one per change of basis.
        #[arg(long)]
        no_normalize: bool,
        /// Include wall time in the output (makes it non-reproducible).
        #[arg(long)]
        timing: bool,
    },
    /// Contract one alignment edge, or contract maximally.
    Contract {
        #[command(flatten)]
        common: Common,
        /// Edge to contract, e.g. "2,3"; without it, contract maximally.
        #[arg(long)]
        edge: Option<String>,
        #[arg(long, value_enum, default_value_t = PolicyArg::Lexicographic)]
        policy: PolicyArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Graphviz rendering of alignment edges and interference stars.
    ExportDot {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args, Debug)]
struct Common {
    /// Instance file (JSON).
    instance: PathBuf,
    /// Write the result here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Human-readable output instead of JSON.
    #[arg(long)]
    text: bool,
}

#[derive(Args, Debug)]
struct BuildArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 32)]
    retries: usize,
    /// Number of contraction orders to try: lexicographic, then seeded random ones.
    #[arg(long, default_value_t = 1)]
    policies: usize,
    /// Include wall time in the output (makes it non-reproducible).
    #[arg(long)]
    timing: bool,
}

impl BuildArgs {
    fn config(&self, q: u32) -> ConstructConfig {
        ConstructConfig {
            q,
            seed: self.seed,
            retries: self.retries,
            policies: ConstructConfig::policies_from_seed(self.seed, self.policies.saturating_sub(1)),
            etig_order: None,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum PolicyArg {
    Lexicographic,
    Random,
}

/// Parses `args` (program name first), runs the command, writes results to
/// `out` and diagnostics to `err`, and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{text}");
            } else {
                let _ = write!(out, "{text}");
            }
            return code;
        }
    };
    match execute(cli.command) {
        Ok((text, code)) => {
            let _ = out.write_all(text.as_bytes());
            code
        }
        Err(CliError(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_INPUT
        }
    }
}

struct CliError(String);

impl<E: std::fmt::Display> From<E> for CliError {
    fn from(e: E) -> Self {
        CliError(e.to_string())
    }
}

fn load(path: &Path) -> Result<Problem, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError(format!("{}: {e}", path.display())))?;
    Ok(Problem::from_json(&text)?)
}

fn json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("outputs serialize");
    s.push('\n');
    s
}

/// Sends `body` to `--out` if given (returning nothing to print) or back for stdout.
fn emit(common: &Common, body: String) -> Result<String, CliError> {
    match &common.out {
        Some(path) => {
            std::fs::write(path, body).map_err(|e| CliError(format!("{}: {e}", path.display())))?;
            Ok(String::new())
        }
        None => Ok(body),
    }
}

fn parse_set(s: &str) -> Result<MessageSet, CliError> {
    let labels = s
        .split(',')
        .map(|x| x.trim().parse::<usize>().map_err(|_| CliError(format!("bad message label {x:?} in {s:?}"))))
        .collect::<Result<Vec<_>, _>>()?;
    if labels.contains(&0) {
        return Err(CliError("message labels start at 1".into()));
    }
    Ok(MessageSet::from_labels(&labels))
}

#[derive(Serialize)]
struct Timed<T: Serialize> {
    #[serde(flatten)]
    inner: T,
    #[serde(skip_serializing_if = "Option::is_none")]
    wall_time_ms: Option<f64>,
}

fn timed<T: Serialize>(inner: T, start: Instant, on: bool) -> Timed<T> {
    Timed { inner, wall_time_ms: on.then(|| start.elapsed().as_secs_f64() * 1000.0) }
}

fn execute(cmd: Command) -> Result<(String, i32), CliError> {
    match cmd {
        Command::Analyze { common, q, construct, build } => {
            let p = load(&common.instance)?;
            let start = Instant::now();
            let mut report = Report::analyze(&p, q.or(p.field_hint()));
            let mut code = match report.verdict.verdict {
                Verdict::Rate1Feasible | Verdict::RateHalfFeasible => EXIT_OK,
                Verdict::RateThirdInfeasible => EXIT_INFEASIBLE,
                Verdict::Inconclusive => EXIT_INCONCLUSIVE,
            };
            if construct && code == EXIT_INCONCLUSIVE {
                if let Ok(c) = construct_rate_third(&p, &build.config(101)) {
                    report.code = Some(CodeOutput::from(&c));
                    code = EXIT_OK;
                }
            }
            let body = if common.text { report.render_text() } else { json(&timed(report, start, build.timing)) };
            Ok((emit(&common, body)?, code))
        }
        Command::Construct { common, q, build } => {
            let p = load(&common.instance)?;
            let start = Instant::now();
            match construct_rate_third(&p, &build.config(q)) {
                Ok(c) => {
                    let out = CodeOutput::from(&c);
                    let body = if common.text { format!("{}\n", render_code(&out)) } else { json(&timed(out, start, build.timing)) };
                    Ok((emit(&common, body)?, EXIT_OK))
                }
                Err(e) => {
                    let code = match &e {
                        ConstructError::RetryExhausted { .. } => EXIT_RETRIES,
                        ConstructError::NoQualifyingContraction { .. } => EXIT_INCONCLUSIVE,
                        _ => return Err(e.into()),
                    };
                    let body = if common.text {
                        format!("construction failed: {e}\n")
                    } else {
                        json(&ConstructFailure::new(&e, build.seed))
                    };
                    Ok((emit(&common, body)?, code))
                }
            }
        }
        Command::Oracle { common, q, length, subsets, minrank, budget, threads, no_normalize, timing } => {
            let p = load(&common.instance)?;
            let config = OracleConfig {
                budget,
                threads: threads.max(1),
                normalization: if no_normalize { Normalization::Off } else { Normalization::Basis },
            };
            let start = Instant::now();
            if minrank {
                let result = oracle::minrank(&p, q, length, &config);
                let (value, code) = match result {
                    Ok(m) => (serde_json::json!({ "q": q, "max_L": length, "minrank": m }), EXIT_OK),
                    Err(OracleError::BudgetExceeded { budget }) => {
                        (serde_json::json!({ "q": q, "max_L": length, "budget_exceeded": budget }), EXIT_INCONCLUSIVE)
                    }
                    Err(e) => return Err(e.into()),
                };
                let body = if common.text { format!("{value}\n") } else { json(&timed(value, start, timing)) };
                return Ok((emit(&common, body)?, code));
            }
            let sets = subsets
                .iter()
                .flat_map(|s| s.split(';').map(str::to_string).collect::<Vec<_>>())
                .filter(|s| !s.trim().is_empty())
                .map(|s| parse_set(&s))
                .collect::<Result<Vec<_>, _>>()?;
            let result = if sets.is_empty() {
                oracle::feasible_rate(&p, length, q, &config)
            } else {
                oracle::classify_subset_dims(&p, &sets, length, q, &config)
            };
            match result {
                Ok(r) => {
                    let code = if r.feasible { EXIT_OK } else { EXIT_INFEASIBLE };
                    let body = if common.text {
                        let mut s = format!(
                            "length-{length} code over GF({q}): {} ({} nodes)\n",
                            if r.feasible { "exists" } else { "none" },
                            r.nodes_explored
                        );
                        for d in r.achievable_dims.iter().flatten() {
                            s.push_str(&format!("  {} spans {}\n", d.subset, d.dims));
                        }
                        s
                    } else {
                        json(&timed(r, start, timing))
                    };
                    Ok((emit(&common, body)?, code))
                }
                Err(OracleError::BudgetExceeded { budget }) => {
                    let body = if common.text {
                        format!("budget of {budget} nodes exhausted; unknown\n")
                    } else {
                        json(&serde_json::json!({ "budget_exceeded": budget }))
                    };
                    Ok((emit(&common, body)?, EXIT_INCONCLUSIVE))
                }
                Err(e) => Err(e.into()),
            }
        }
        Command::Contract { common, edge, policy, seed } => {
            let p = load(&common.instance)?;
            let (q, map) = match edge {
                Some(e) => {
                    let set: Vec<usize> = parse_set(&e)?.iter().copied().collect();
                    if set.len() != 2 {
                        return Err(CliError(format!("--edge needs two distinct messages, got {e:?}")));
                    }
                    contract_edge(&p, set[0], set[1])?
                }
                None => {
                    let policy = match policy {
                        PolicyArg::Lexicographic => ContractionPolicy::Lexicographic,
                        PolicyArg::Random => ContractionPolicy::Random { seed },
                    };
                    maximal_contraction(&p, policy)
                }
            };
            #[derive(Serialize)]
            struct ContractOutput<'a> {
                instance: InstanceFile,
                map: &'a ContractionMap,
            }
            let body = if common.text {
                let mut s = format!("{} messages -> {}\n", map.source_n, map.target_n);
                for (a, b) in &map.history {
                    s.push_str(&format!("  merged {} and {}\n", a + 1, b + 1));
                }
                s
            } else {
                json(&ContractOutput { instance: q.to_instance(), map: &map })
            };
            Ok((emit(&common, body)?, EXIT_OK))
        }
        Command::ExportDot { common } => {
            let p = load(&common.instance)?;
            Ok((emit(&common, export_dot(&p))?, EXIT_OK))
        }
    }
}

#[derive(Serialize)]
struct ConstructFailure {
    error: String,
    seed: u64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    policies: Vec<serde_json::Value>,
}

impl ConstructFailure {
    fn new(e: &ConstructError, seed: u64) -> Self {
        let policies = match e {
            ConstructError::NoQualifyingContraction { reports } => reports
                .iter()
                .map(|(p, r)| serde_json::json!({ "policy": p, "conditions": r, "note": "sufficient conditions fail on this contraction" }))
                .collect(),
            _ => Vec::new(),
        };
        ConstructFailure { error: e.to_string(), seed, policies }
    }
}
