//! `belief-sim`: run, benchmark and check belief-network samplers.

mod output;

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use belief_core::exact::{exact_posteriors, ExactEngine, ExactError};
use belief_core::harness::{
    instantiation_budget, prune_for_targets, run_experiment, Experiment, HarnessError,
};
use belief_core::sampler::{Algorithm, Run, SamplerConfig, SamplerError};
use belief_core::{load_evidence, load_network, Evidence, Network, NodeId};
use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::output::Format;

/// Exit status for each failure class.
#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Runtime(String),
    #[error("interrupted")]
    Interrupted,
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Input(_) => 2,
            CliError::Runtime(_) | CliError::Interrupted => 3,
        }
    }
}

impl From<SamplerError> for CliError {
    fn from(e: SamplerError) -> Self {
        match e {
            SamplerError::Chain(_) => CliError::Runtime(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<ExactError> for CliError {
    fn from(e: ExactError) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Sampler(e) => e.into(),
            HarnessError::Exact(e) => e.into(),
            HarnessError::Empty(_) => CliError::Usage(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "belief-sim", version, about = "Stochastic simulation of Bayesian belief networks")]
struct Cli {
    /// Worker threads for benchmark trials (0 = one per core).
    #[arg(long, global = true, env = "BELIEF_SIM_THREADS", default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one sampler and print its posterior estimates.
    Run(RunArgs),
    /// Compare samplers over repeated trials against the exact answer.
    Bench(BenchArgs),
    /// Print exact posterior marginals.
    Exact(ExactArgs),
    /// Check a network file (and optionally an evidence file).
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
struct Inputs {
    /// Network document.
    #[arg(long)]
    network: PathBuf,
    /// Evidence document; no evidence when omitted.
    #[arg(long)]
    evidence: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SamplerArgs {
    /// Nodes that get Markov-blanket scoring under `basic-mb` (default: all).
    #[arg(long, value_delimiter = ',')]
    mb_nodes: Option<Vec<String>>,
    /// Iterations between self-importance updates.
    #[arg(long, default_value_t = 100)]
    si_period: u64,
    /// Restarts per trial for the restarted chain samplers.
    #[arg(long, default_value_t = 10)]
    restarts: u64,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[command(flatten)]
    inputs: Inputs,
    #[arg(long)]
    algorithm: Algorithm,
    /// Base iterations; chain samplers run this times the unobserved node count.
    #[arg(long)]
    iterations: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
    #[command(flatten)]
    sampler: SamplerArgs,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[command(flatten)]
    inputs: Inputs,
    #[arg(long, value_delimiter = ',', default_value = "logic,basic,basic-mb,self-importance,heuristic-importance,pearl,pearl-mb,chavez,chavez-mb")]
    algorithms: Vec<Algorithm>,
    #[arg(long, value_delimiter = ',', default_value = "250,1000")]
    iterations: Vec<u64>,
    #[arg(long, default_value_t = 25)]
    trials: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also write the report here (format from the extension, else `--format`).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
    #[arg(long, value_enum, default_value_t = Engine::Enum)]
    engine: Engine,
    /// Measure error on these nodes only and simulate just what they need.
    #[arg(long, value_delimiter = ',')]
    targets: Option<Vec<String>>,
    #[command(flatten)]
    sampler: SamplerArgs,
}

#[derive(Debug, Args)]
struct ExactArgs {
    #[command(flatten)]
    inputs: Inputs,
    #[arg(long, value_enum, default_value_t = Engine::Enum)]
    engine: Engine,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    /// Network document.
    network: PathBuf,
    #[arg(long)]
    evidence: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Engine {
    /// Full enumeration.
    Enum,
    /// Variable elimination.
    Ve,
}

impl From<Engine> for ExactEngine {
    fn from(e: Engine) -> Self {
        match e {
            Engine::Enum => ExactEngine::Enumeration,
            Engine::Ve => ExactEngine::VariableElimination,
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn load(inputs: &Inputs) -> Result<(Network, Evidence), CliError> {
    let net: Network = load_network(&read(&inputs.network)?)
        .map_err(|e| CliError::Input(format!("{}: {e}", inputs.network.display())))?;
    let ev = match &inputs.evidence {
        Some(path) => load_evidence(&net, &read(path)?)
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?,
        None => Evidence::empty(),
    };
    Ok((net, ev))
}

fn node_ids(net: &Network, names: &[String]) -> Result<BTreeSet<NodeId>, CliError> {
    names
        .iter()
        .map(|n| {
            net.node_id(n)
                .ok_or_else(|| CliError::Input(format!("unknown variable `{n}`")))
        })
        .collect()
}

fn sampler_config(
    net: &Network,
    args: &SamplerArgs,
    algorithm: Algorithm,
    iterations: u64,
    seed: u64,
) -> Result<SamplerConfig, CliError> {
    let mut c = SamplerConfig::new(algorithm, iterations, seed);
    c.si_period = args.si_period;
    c.restarts = args.restarts;
    c.mb_nodes = args.mb_nodes.as_deref().map(|n| node_ids(net, n)).transpose()?;
    Ok(c)
}

fn run(args: RunArgs, interrupted: &AtomicBool) -> Result<(), CliError> {
    let (net, ev) = load(&args.inputs)?;
    let free = (0..net.len()).filter(|&j| !ev.contains(j)).count() as u64;
    if free == 0 {
        return Err(CliError::Input("every node is observed; nothing to simulate".into()));
    }
    let budget = instantiation_budget(args.algorithm, args.iterations, free);
    let config = sampler_config(&net, &args.sampler, args.algorithm, budget, args.seed)?;
    let mut run = Run::new(&net, &ev, config)?;
    while !run.is_finished() {
        if interrupted.load(Ordering::Relaxed) {
            log::warn!(
                "interrupted after {} of {budget} iterations; reporting the current estimate",
                run.completed()
            );
            output::print_run(&net, &run, args.format, true)?;
            return Err(CliError::Interrupted);
        }
        run.step()?;
    }
    output::print_run(&net, &run, args.format, false)
}

fn bench(args: BenchArgs) -> Result<(), CliError> {
    let (net, ev) = load(&args.inputs)?;
    let mut exp = Experiment::new(net, ev);
    exp.algorithms = args.algorithms;
    exp.iterations = args.iterations;
    exp.trials = args.trials;
    exp.seed = args.seed;
    exp.engine = args.engine.into();
    exp.options.si_period = args.sampler.si_period;
    exp.options.restarts = args.sampler.restarts;
    exp.options.mb_nodes = args
        .sampler
        .mb_nodes
        .as_deref()
        .map(|n| node_ids(&exp.network, n))
        .transpose()?;
    if let Some(names) = &args.targets {
        let targets = node_ids(&exp.network, names)?;
        exp = prune_for_targets(&exp, &targets)?;
    }
    let report = run_experiment(&exp)?;
    output::print_report(&report, args.format, &mut std::io::stdout().lock())?;
    if let Some(path) = &args.out {
        let format = Format::from_extension(path).unwrap_or(args.format);
        let mut file = fs::File::create(path)
            .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
        output::print_report(&report, format, &mut file)?;
    }
    let aborted: u32 = report.summaries.iter().map(|s| s.aborted).sum();
    if aborted > 0 {
        log::warn!("{aborted} trial(s) aborted; see the report");
    }
    Ok(())
}

fn exact(args: ExactArgs) -> Result<(), CliError> {
    let (net, ev) = load(&args.inputs)?;
    let table = exact_posteriors(&net, &ev, args.engine.into())?;
    if table.is_inconsistent() {
        return Err(CliError::Input("the evidence has probability zero".into()));
    }
    output::print_exact(&net, &table, args.format)
}

fn validate(args: ValidateArgs) -> Result<(), CliError> {
    let (net, ev) = load(&Inputs {
        network: args.network,
        evidence: args.evidence,
    })?;
    let arcs: usize = (0..net.len()).map(|j| net.parents(j).len()).sum();
    let order: Vec<&str> = net
        .topological_order()
        .iter()
        .map(|&j| net.variable(j).name())
        .collect();
    println!("ok: {} variables, {arcs} arcs, {} joint states", net.len(), net.joint_state_count());
    println!("order: {}", order.join(" "));
    if !ev.is_empty() {
        println!("evidence: {} observed", ev.len());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
        {
            log::warn!("could not size the thread pool: {e}");
        }
    }
    let interrupted = Arc::new(AtomicBool::new(false));
    let flag = Arc::clone(&interrupted);
    if let Err(e) = ctrlc::set_handler(move || flag.store(true, Ordering::Relaxed)) {
        log::warn!("no interrupt handler: {e}");
    }
    let result = match cli.command {
        Command::Run(a) => run(a, &interrupted),
        Command::Bench(a) => bench(a),
        Command::Exact(a) => exact(a),
        Command::Validate(a) => validate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if !matches!(e, CliError::Interrupted) {
                eprintln!("error: {e}");
            }
            ExitCode::from(e.code())
        }
    }
}
