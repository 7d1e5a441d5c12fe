//! `ramify`: simulate, encode and verify multitype branching forests.
//!
//! Exit status: 0 on success, 1 when a verification check fails, 2 on usage,
//! input or I/O errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ramify::coding::{decode, encode, lamperti_discrete, smallest_solution};
use ramify::continuous::{first_passage_density, sample_edge_length_forest, sample_first_passage};
use ramify::discrete::{joint_law_pmf, sample_forest_seeded, SampleCaps};
use ramify::distributions::Weight;
use ramify::forest::alive_trajectory;
use ramify::io::{self, ForestFile, IoError, ProgenyFile};
use ramify::stats::P_THRESHOLD;
use ramify::verify::{run_suite, Model, Suite, VerifyConfig};
use serde::Serialize;
use serde_json::json;

const SEED_VAR: &str = "RAMIFY_SEED";

#[derive(Debug, Parser, Serialize)]
#[command(name = "ramify", version, about = "Multitype branching forests, their coding and Lamperti representation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
enum Command {
    /// Sample a forest or a population trajectory.
    #[command(subcommand)]
    Simulate(Simulate),
    /// Breadth-first coding of a forest.
    Encode(Encode),
    /// Forest from a coding sequence.
    Decode(Decode),
    /// Smallest solution and generation chains of a coding sequence.
    Solve(Solve),
    /// Evaluate an exact law.
    #[command(subcommand)]
    Law(Law),
    /// Sample the first passage of the compound Poisson field at `-x`.
    Passage(Passage),
    /// Run a verification suite.
    Verify(Verify),
}

#[derive(Debug, Subcommand, Serialize)]
enum Simulate {
    /// Galton-Watson forest.
    Discrete(SimulateDiscrete),
    /// Continuous-time forest with exponential lifetimes and its trajectory.
    Continuous(SimulateContinuous),
}

#[derive(Debug, Args, Serialize)]
struct SimulateDiscrete {
    #[arg(long)]
    nu: PathBuf,
    /// Root counts per type, e.g. `2,1`.
    #[arg(long, value_delimiter = ',', required = true)]
    roots: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    replica: u64,
    #[arg(long, default_value_t = 10_000)]
    max_gen: usize,
    #[arg(long, default_value_t = 1_000_000)]
    max_vertices: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct SimulateContinuous {
    #[arg(long)]
    nu: PathBuf,
    /// Lifetime rates per type.
    #[arg(long, value_delimiter = ',', required = true)]
    rates: Vec<f64>,
    /// Initial population per type.
    #[arg(long, value_delimiter = ',', required = true)]
    x: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    replica: u64,
    #[arg(long, default_value_t = 1_000_000)]
    max_vertices: usize,
    /// Trajectory CSV.
    #[arg(long)]
    out: PathBuf,
    /// Also write the edge-length forest.
    #[arg(long)]
    forest_out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct Encode {
    /// Forest JSON.
    forest: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct Decode {
    /// Coding-sequence JSON.
    coding: PathBuf,
    #[arg(long, value_delimiter = ',', required = true)]
    roots: Vec<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct Solve {
    /// Coding-sequence JSON.
    coding: PathBuf,
    #[arg(long, value_delimiter = ',', required = true)]
    roots: Vec<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand, Serialize)]
enum Law {
    /// Joint law of the population sizes `n` and terminal walk values `K`.
    Ballot(LawBallot),
    /// Density of the passage times `T_x` at `t` with terminal matrix `K`.
    Passage(LawPassage),
}

#[derive(Debug, Args, Serialize)]
struct LawBallot {
    #[arg(long)]
    nu: PathBuf,
    #[arg(long, value_delimiter = ',', required = true)]
    roots: Vec<usize>,
    #[arg(long, value_delimiter = ',', required = true)]
    n: Vec<usize>,
    /// Matrix JSON (array of rows).
    #[arg(long = "K")]
    k: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct LawPassage {
    #[arg(long)]
    nu: PathBuf,
    #[arg(long, value_delimiter = ',', required = true)]
    rates: Vec<f64>,
    #[arg(long, value_delimiter = ',', required = true)]
    x: Vec<usize>,
    #[arg(long, value_delimiter = ',', required = true)]
    t: Vec<f64>,
    #[arg(long = "K")]
    k: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct Passage {
    #[arg(long)]
    nu: PathBuf,
    #[arg(long, value_delimiter = ',', required = true)]
    rates: Vec<f64>,
    #[arg(long, value_delimiter = ',', required = true)]
    x: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    replica: u64,
    /// Largest internal time explored before giving up.
    #[arg(long, default_value_t = 1e4)]
    max_horizon: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct Verify {
    #[arg(value_parser = parse_suite)]
    #[serde(serialize_with = "suite_name")]
    suite: Suite,
    #[arg(long, default_value_t = 1_000)]
    replicas: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    #[arg(long, default_value_t = P_THRESHOLD)]
    threshold: f64,
    /// Progeny law for the Monte Carlo checks (default: built-in two-type law).
    #[arg(long, requires = "rates")]
    nu: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', requires = "nu")]
    rates: Option<Vec<f64>>,
}

fn parse_suite(s: &str) -> Result<Suite, String> {
    s.parse()
}

fn suite_name<S: serde::Serializer>(suite: &Suite, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(suite.name())
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Io(IoError),
    Failed,
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        CliError::Io(e)
    }
}

fn usage(message: impl ToString) -> CliError {
    CliError::Usage(message.to_string())
}

fn load_progeny(path: &Path) -> Result<ProgenyFile, CliError> {
    Ok(io::parse_progeny(&io::read_text(path)?)?)
}

fn check_len<T>(name: &str, v: &[T], d: usize) -> Result<(), CliError> {
    if v.len() == d {
        Ok(())
    } else {
        Err(usage(format!("--{name} has {} entries, the law has {d} types", v.len())))
    }
}

/// Writes `contents` to `path`, or to stdout when no path is given, and
/// records the command line next to the artifact as `<path>.run.json`.
fn emit(path: Option<&Path>, contents: &str, run: &serde_json::Value) -> Result<(), CliError> {
    match path {
        Some(path) => {
            io::write_atomic(path, contents.as_bytes())?;
            let mut sidecar = path.as_os_str().to_owned();
            sidecar.push(".run.json");
            let text = serde_json::to_string_pretty(run).expect("serializable") + "\n";
            io::write_atomic(Path::new(&sidecar), text.as_bytes())?;
        }
        None => print!("{contents}"),
    }
    Ok(())
}

fn run_config(cli: &Cli, extra: serde_json::Value) -> serde_json::Value {
    json!({ "ramify": env!("CARGO_PKG_VERSION"), "command": cli.command, "outcome": extra })
}

fn dispatch(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Simulate(Simulate::Discrete(a)) => {
            let nu = load_progeny(&a.nu)?.nu;
            check_len("roots", &a.roots, nu.d())?;
            let caps = SampleCaps { max_vertices: a.max_vertices, max_generation: a.max_gen };
            let sampled = sample_forest_seeded(&nu, &a.roots, caps, a.seed, a.replica);
            if sampled.truncated {
                eprintln!("warning: sampling stopped at the vertex or generation cap");
            }
            let text = ForestFile::Discrete(sampled.forest).to_json();
            emit(Some(&a.out), &text, &run_config(cli, json!({ "truncated": sampled.truncated })))
        }
        Command::Simulate(Simulate::Continuous(a)) => {
            let nu = load_progeny(&a.nu)?.nu;
            check_len("rates", &a.rates, nu.d())?;
            check_len("x", &a.x, nu.d())?;
            let caps = SampleCaps { max_vertices: a.max_vertices, ..SampleCaps::default() };
            let sampled =
                sample_edge_length_forest(&nu, &a.rates, &a.x, caps, a.seed, a.replica).map_err(usage)?;
            if sampled.truncated {
                eprintln!("warning: sampling stopped at the vertex cap; the trajectory is incomplete");
            }
            let run = run_config(cli, json!({ "truncated": sampled.truncated }));
            emit(Some(&a.out), &io::trajectory_csv(&alive_trajectory(&sampled.forest)), &run)?;
            if let Some(path) = &a.forest_out {
                emit(Some(path), &ForestFile::EdgeLength(sampled.forest).to_json(), &run)?;
            }
            Ok(())
        }
        Command::Encode(a) => {
            let forest = io::parse_forest(&io::read_text(&a.forest)?)?;
            let x = encode(forest.skeleton()).map_err(usage)?;
            emit(a.out.as_deref(), &io::coding_to_json(&x), &run_config(cli, json!(null)))
        }
        Command::Decode(a) => {
            let x = io::parse_coding(&io::read_text(&a.coding)?)?;
            let forest = decode(&x, &a.roots).map_err(usage)?;
            emit(a.out.as_deref(), &ForestFile::Discrete(forest).to_json(), &run_config(cli, json!(null)))
        }
        Command::Solve(a) => {
            let x = io::parse_coding(&io::read_text(&a.coding)?)?;
            check_len("roots", &a.roots, x.d())?;
            let solution = smallest_solution(&a.roots, &x);
            let s: Vec<Option<usize>> = solution.coords.iter().map(|c| c.value()).collect();
            let horizon = x.lengths();
            let chains = solution
                .resolved_values()
                .and_then(|lengths| lamperti_discrete(&x.truncated(&lengths), &a.roots).ok())
                .map(|c| json!({ "z": c.z, "zmat": c.zmat }));
            let body = json!({ "s": s, "horizon": horizon, "resolved": solution.all_resolved(), "chains": chains });
            let text = serde_json::to_string_pretty(&body).expect("serializable") + "\n";
            emit(a.out.as_deref(), &text, &run_config(cli, json!(null)))
        }
        Command::Law(Law::Ballot(a)) => {
            let file = load_progeny(&a.nu)?;
            let d = file.nu.d();
            check_len("roots", &a.roots, d)?;
            check_len("n", &a.n, d)?;
            let k = io::parse_matrix(&io::read_text(&a.k)?, d)?;
            match &file.exact {
                Some(exact) => {
                    let p = joint_law_pmf(exact, &a.roots, &a.n, &k);
                    println!("exact: {p}");
                    println!("float: {}", p.to_f64());
                }
                None => {
                    println!("exact: unavailable (probabilities are not exact rationals summing to one)");
                    println!("float: {}", joint_law_pmf(&file.nu, &a.roots, &a.n, &k));
                }
            }
            Ok(())
        }
        Command::Law(Law::Passage(a)) => {
            let nu = load_progeny(&a.nu)?.nu;
            let d = nu.d();
            check_len("rates", &a.rates, d)?;
            check_len("x", &a.x, d)?;
            check_len("t", &a.t, d)?;
            let k = io::parse_matrix(&io::read_text(&a.k)?, d)?;
            let density = first_passage_density(&nu, &a.rates, &a.x, &a.t, &k).map_err(usage)?;
            println!("{density}");
            Ok(())
        }
        Command::Passage(a) => {
            let nu = load_progeny(&a.nu)?.nu;
            check_len("rates", &a.rates, nu.d())?;
            check_len("x", &a.x, nu.d())?;
            let (_, fp) =
                sample_first_passage(&nu, &a.rates, &a.x, a.max_horizon, a.seed, a.replica).map_err(usage)?;
            let body = json!({ "x": a.x, "T": fp.t, "K": fp.terminal, "jumps": fp.s });
            let text = serde_json::to_string_pretty(&body).expect("serializable") + "\n";
            emit(a.out.as_deref(), &text, &run_config(cli, json!(null)))
        }
        Command::Verify(a) => {
            let model = match (&a.nu, &a.rates) {
                (Some(nu), Some(rates)) => {
                    let nu = load_progeny(nu)?.nu;
                    check_len("rates", rates, nu.d())?;
                    Model { nu, rates: rates.clone() }
                }
                _ => Model::default(),
            };
            let config = VerifyConfig {
                threads: a.threads.max(1),
                threshold: a.threshold,
                ..VerifyConfig::new(a.replicas, a.seed)
            };
            let reports = run_suite(a.suite, &model, &config).map_err(usage)?;
            for r in &reports {
                println!("{r}");
            }
            if let Some(path) = &a.report {
                let text = serde_json::to_string_pretty(&reports).expect("serializable") + "\n";
                emit(Some(path), &text, &run_config(cli, json!(null)))?;
            }
            if reports.iter().all(|r| r.pass) {
                Ok(())
            } else {
                Err(CliError::Failed)
            }
        }
    }
}

/// Applies `RAMIFY_SEED`, which takes precedence over `--seed`.
fn apply_seed_override(cli: &mut Cli) -> Result<(), CliError> {
    let Ok(value) = std::env::var(SEED_VAR) else { return Ok(()) };
    let seed: u64 = value.trim().parse().map_err(|_| usage(format!("{SEED_VAR}={value:?} is not a u64")))?;
    match &mut cli.command {
        Command::Simulate(Simulate::Discrete(a)) => a.seed = seed,
        Command::Simulate(Simulate::Continuous(a)) => a.seed = seed,
        Command::Passage(a) => a.seed = seed,
        Command::Verify(a) => a.seed = seed,
        _ => {}
    }
    Ok(())
}

fn main() -> ExitCode {
    let mut cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = apply_seed_override(&mut cli).and_then(|()| dispatch(&cli));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Failed) => ExitCode::from(1),
        Err(CliError::Usage(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
        Err(CliError::Io(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
