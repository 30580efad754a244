//! Command-line front end: `fuzz`, `reduce` and `stats`.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::Ordering;
use std::sync::Arc;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use chcfuzz::mutation::{MutationType, Mutator, ProcessRewriter};
use chcfuzz::oracle::ProcessOracle;
use chcfuzz::report::{self, STATS_FILE};
use chcfuzz::scheduler::{Heuristic, StatsSnapshot};
use chcfuzz::session::{reduce_finding, seed_files, ReduceSettings, Session, SessionConfig};
use chcfuzz::solver::{ProcessSolver, SolverCommand, TraceProfile, TraceProfileSpec};

#[derive(Parser, Debug)]
#[command(name = "chcfuzz", version, about = "Mutation-based fuzzer for CHC solvers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fuzz a solver until interrupted or a limit is reached.
    Fuzz(FuzzArgs),
    /// Shrink a stored finding.
    Reduce(ReduceArgs),
    /// Print the latest statistics snapshot of a session.
    Stats {
        /// Session output directory (or a stats.json file).
        out: PathBuf,
        /// Print the raw JSON snapshot.
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args, Debug, Clone)]
struct SolverArgs {
    /// Solver under test.
    #[arg(long)]
    solver: Option<PathBuf>,
    /// Extra argument passed to the solver under test (repeatable).
    #[arg(long = "solver-arg", allow_hyphen_values = true)]
    solver_args: Vec<String>,
    /// Solver used for equivalence checks, model checks and rewrites.
    #[arg(long)]
    oracle: Option<PathBuf>,
    /// Per-run timeout for the solver under test, in seconds.
    #[arg(long)]
    timeout: Option<f64>,
    /// Per-query timeout for the oracle solver, in seconds.
    #[arg(long = "oracle-timeout")]
    oracle_timeout: Option<f64>,
    /// Trace profile: `z3-trace`, `z3-verbose` or a TOML profile file.
    #[arg(long = "trace-profile")]
    trace_profile: Option<String>,
}

#[derive(Args, Debug)]
struct FuzzArgs {
    /// Directory of seed `.smt2` files.
    #[arg(long)]
    seeds: Option<PathBuf>,
    /// TOML file with defaults for any of these options.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long)]
    workers: Option<usize>,
    /// Enabled mutation types, comma separated: own, rewrites, params.
    #[arg(long, value_delimiter = ',')]
    mutations: Option<Vec<MutationType>>,
    /// Seed selection: default, rare-transitions, complex, simple or `A+B`.
    #[arg(long)]
    heuristic: Option<Heuristic>,
    /// `equiprobable` picks mutations uniformly instead of by weight.
    #[arg(long, value_delimiter = ',')]
    options: Vec<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed of the scheduler's random generator.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long = "max-runs")]
    max_runs: Option<u64>,
    /// Wall-clock limit in seconds.
    #[arg(long = "max-time")]
    max_time: Option<f64>,
    /// Reduce each finding as soon as it is written.
    #[arg(long)]
    reduce: bool,
}

#[derive(Args, Debug)]
struct ReduceArgs {
    /// Finding directory written by `fuzz`.
    finding: PathBuf,
    #[command(flatten)]
    solver: SolverArgs,
    /// Maximum number of bug-predicate evaluations.
    #[arg(long, default_value_t = 2000)]
    budget: usize,
}

/// Options read from `--config`; flags given on the command line win.
#[derive(Deserialize, Debug, Default)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
struct FileConfig {
    seeds: Option<PathBuf>,
    solver: Option<PathBuf>,
    #[serde(default)]
    solver_args: Vec<String>,
    oracle: Option<PathBuf>,
    timeout: Option<f64>,
    oracle_timeout: Option<f64>,
    trace_profile: Option<String>,
    workers: Option<usize>,
    mutations: Option<Vec<String>>,
    heuristic: Option<String>,
    #[serde(default)]
    equiprobable: bool,
    out: Option<PathBuf>,
    seed: Option<u64>,
    max_runs: Option<u64>,
    max_time: Option<f64>,
    #[serde(default)]
    reduce: bool,
}

/// Accepts the single-dash spellings `-mutations`, `-heuristic` and
/// `-options` next to the usual `--` forms.
fn normalize_args(args: impl Iterator<Item = String>) -> Vec<String> {
    args.map(|a| match a.as_str() {
        "-mutations" | "-heuristic" | "-options" => format!("-{a}"),
        _ => a,
    })
    .collect()
}

fn seconds(s: f64) -> Result<Duration> {
    Duration::try_from_secs_f64(s).with_context(|| format!("invalid duration {s}"))
}

struct Tools {
    solver: Arc<ProcessSolver>,
    oracle: Arc<ProcessOracle>,
    mutator: Mutator,
    timeout_solve: Duration,
    timeout_oracle: Duration,
}

fn load_profile(name: &str) -> Result<TraceProfile> {
    if let Some(p) = TraceProfile::builtin(name) {
        return Ok(p);
    }
    let text = std::fs::read_to_string(name).with_context(|| format!("trace profile `{name}`"))?;
    let spec: TraceProfileSpec = toml::from_str(&text).with_context(|| format!("trace profile `{name}`"))?;
    TraceProfile::compile(spec).with_context(|| format!("trace profile `{name}`"))
}

/// Solvers run inside a scratch directory, so a relative path with a
/// directory part is anchored to the current directory first. Bare names
/// are left for `PATH` lookup.
fn program_path(p: Option<PathBuf>) -> Result<PathBuf> {
    match p {
        None => Ok(PathBuf::from("z3")),
        Some(p) if p.components().count() > 1 => {
            std::path::absolute(&p).with_context(|| format!("resolving {}", p.display()))
        }
        Some(p) => Ok(p),
    }
}

fn tools(args: &SolverArgs, file: &FileConfig) -> Result<Tools> {
    let program = program_path(args.solver.clone().or(file.solver.clone()))?;
    let solver_args = if args.solver_args.is_empty() { file.solver_args.clone() } else { args.solver_args.clone() };
    let command = SolverCommand::new(program).with_args(solver_args);
    let oracle_cmd = SolverCommand::new(program_path(args.oracle.clone().or(file.oracle.clone()))?);
    let timeout_solve = seconds(args.timeout.or(file.timeout).unwrap_or(60.0))?;
    let timeout_oracle = seconds(args.oracle_timeout.or(file.oracle_timeout).unwrap_or(10.0))?;
    let solver = match args.trace_profile.as_deref().or(file.trace_profile.as_deref()) {
        Some(name) => ProcessSolver::new(command, load_profile(name)?),
        None => ProcessSolver::with_probed_profile(command, TraceProfile::z3_trace())?,
    };
    let rewriter = ProcessRewriter { command: oracle_cmd.clone(), timeout: timeout_oracle };
    Ok(Tools {
        solver: Arc::new(solver),
        oracle: Arc::new(ProcessOracle::new(oracle_cmd)),
        mutator: Mutator::with_rewriter(Arc::new(rewriter)),
        timeout_solve,
        timeout_oracle,
    })
}

fn fuzz(args: FuzzArgs) -> Result<()> {
    let file: FileConfig = match &args.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            toml::from_str(&text).with_context(|| format!("parsing {}", p.display()))?
        }
        None => FileConfig::default(),
    };
    let Some(seeds_dir) = args.seeds.clone().or(file.seeds.clone()) else {
        bail!("no seed directory given (--seeds)");
    };
    let seeds = seed_files(&seeds_dir).with_context(|| format!("listing {}", seeds_dir.display()))?;
    if seeds.is_empty() {
        bail!("{} contains no .smt2 files", seeds_dir.display());
    }
    let mutation_types = match (&args.mutations, &file.mutations) {
        (Some(m), _) => m.clone(),
        (None, Some(m)) => m.iter().map(|s| s.parse()).collect::<Result<_, String>>().map_err(anyhow::Error::msg)?,
        (None, None) => MutationType::ALL.to_vec(),
    };
    let heuristic = match (&args.heuristic, &file.heuristic) {
        (Some(h), _) => h.clone(),
        (None, Some(h)) => h.parse().map_err(anyhow::Error::msg)?,
        (None, None) => Heuristic::Default,
    };
    let mut equiprobable = file.equiprobable;
    for o in &args.options {
        match o.as_str() {
            "equiprobable" => equiprobable = true,
            other => bail!("unknown option `{other}` (expected equiprobable)"),
        }
    }
    let t = tools(&args.solver, &file)?;
    let config = SessionConfig {
        seeds,
        timeout_solve: t.timeout_solve,
        timeout_oracle: t.timeout_oracle,
        workers: args.workers.or(file.workers).unwrap_or(1),
        mutation_types,
        heuristic,
        equiprobable,
        out_dir: args.out.clone().or(file.out.clone()).unwrap_or_else(|| PathBuf::from("chcfuzz-out")),
        random_seed: args.seed.or(file.seed).unwrap_or(0),
        max_runs: args.max_runs.or(file.max_runs),
        max_time: args.max_time.or(file.max_time).map(seconds).transpose()?,
        reduce: args.reduce || file.reduce,
        ..SessionConfig::default()
    };
    let mut session = Session::new(config, t.solver, t.oracle, t.mutator)?;
    let stop = session.stop_handle();
    ctrlc::set_handler(move || stop.store(true, Ordering::SeqCst)).context("installing the interrupt handler")?;
    let summary = session.run()?;
    println!(
        "{} runs in {:.1}s, {} unique traces, {} findings",
        summary.runs,
        summary.elapsed.as_secs_f64(),
        summary.unique_traces,
        summary.findings.len()
    );
    for f in &summary.findings {
        println!("  {}", f.display());
    }
    Ok(())
}

fn reduce(args: ReduceArgs) -> Result<()> {
    let t = tools(&args.solver, &FileConfig::default())?;
    let loaded = report::load_finding(&args.finding)?;
    let settings = ReduceSettings { timeout_solve: t.timeout_solve, timeout_oracle: t.timeout_oracle, budget: args.budget };
    let r = reduce_finding(&loaded, t.solver.as_ref(), t.oracle.as_ref(), &t.mutator, &settings)?;
    println!(
        "chain {} -> {} records, {} clauses left, {} evaluations",
        loaded.finding.chain.records.len(),
        r.chain.records.len(),
        r.system.clauses.len(),
        r.evaluations
    );
    Ok(())
}

fn print_stats(path: &Path, json: bool) -> Result<()> {
    use std::fmt::Write as _;
    let file = if path.is_dir() { path.join(STATS_FILE) } else { path.to_path_buf() };
    let s: StatsSnapshot = report::read_json(&file)?;
    let mut text = String::new();
    if json {
        text = std::fs::read_to_string(&file)?;
    } else {
        let w = &mut text;
        writeln!(w, "runs: {}", s.runs)?;
        writeln!(w, "unique traces: {}", s.unique_traces)?;
        writeln!(w, "skipped iterations: {}", s.skipped_iterations)?;
        writeln!(w, "weight updates: {}", s.weight_updates)?;
        writeln!(w, "rollbacks: {}", s.rollbacks)?;
        for (k, v) in &s.verdicts {
            writeln!(w, "verdict {k}: {v}")?;
        }
        for (k, v) in &s.findings {
            writeln!(w, "finding {k}: {v}")?;
        }
        for (k, v) in &s.switches {
            writeln!(w, "switch {k}: {v}")?;
        }
        for g in &s.groups {
            let retired = if g.retired { ", retired" } else { "" };
            writeln!(w, "group {} ({}): {} runs, chain {}, {} bugs{retired}", g.seed_id, g.truth, g.runs, g.chain_len, g.bug_count)?;
        }
    }
    // A closed pipe (e.g. `| head`) is not an error worth reporting.
    match std::io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse_from(normalize_args(std::env::args()));
    let r = match cli.command {
        Command::Fuzz(a) => fuzz(a),
        Command::Reduce(a) => reduce(a),
        Command::Stats { out, json } => print_stats(&out, json),
    };
    match r {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
