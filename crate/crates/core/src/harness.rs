//! Multi-trial comparison of samplers against the exact answer.
//!
//! Every algorithm is given the same number of variable instantiations per
//! trial: forward samplers instantiate every unobserved node per iteration,
//! the Markov-chain samplers one node per iteration, so the latter run
//! `iterations * |unobserved|` steps.
//!
//! Trial seeds are `derive_seed(master, "<tag>/<iterations>", trial)`, so any
//! single trial can be rerun in isolation and the report does not depend on
//! how trials are scheduled across threads.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::exact::{exact_posteriors, ExactEngine, ExactError, MarginalTable};
use crate::metrics::{fertig_mann_error_on, MetricError};
use crate::network::{BeliefNetwork, Evidence, NetworkError, NodeId};
use crate::rng::{derive_seed, seeded};
use crate::sampler::{Algorithm, Counters, Run, SamplerConfig, SamplerError};
use crate::scalar::Probability;
use crate::scores::PosteriorEstimate;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HarnessError {
    #[error("an experiment needs at least one {0}")]
    Empty(&'static str),
    #[error("every node is observed; there is nothing to simulate")]
    NothingToSample,
    #[error("the evidence has probability zero under the network")]
    InconsistentEvidence,
    #[error("target node {0} is unknown")]
    UnknownTarget(NodeId),
    #[error(transparent)]
    Exact(#[from] ExactError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Sampler(#[from] SamplerError),
    #[error(transparent)]
    Network(#[from] NetworkError),
}

/// Per-algorithm knobs shared by every trial.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SamplerOptions {
    pub si_period: u64,
    pub mb_nodes: Option<BTreeSet<NodeId>>,
    pub restarts: u64,
    pub init_attempts: u32,
}

impl Default for SamplerOptions {
    fn default() -> Self {
        let c = SamplerConfig::new(Algorithm::Basic, 1, 0);
        Self {
            si_period: c.si_period,
            mb_nodes: c.mb_nodes,
            restarts: c.restarts,
            init_attempts: c.init_attempts,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Experiment<T: Probability> {
    pub network: BeliefNetwork<T>,
    pub evidence: Evidence,
    pub algorithms: Vec<Algorithm>,
    /// Base iteration counts; one block of trials per entry.
    pub iterations: Vec<u64>,
    pub trials: u32,
    pub seed: u64,
    pub options: SamplerOptions,
    /// Nodes the error is measured on; every unobserved node when `None`.
    pub targets: Option<BTreeSet<NodeId>>,
    /// Original id of every node when the network was pruned.
    pub original_ids: Option<Vec<NodeId>>,
    pub engine: ExactEngine,
}

impl<T: Probability> Experiment<T> {
    pub fn new(network: BeliefNetwork<T>, evidence: Evidence) -> Self {
        Self {
            network,
            evidence,
            algorithms: Algorithm::ALL.to_vec(),
            iterations: vec![250, 1000],
            trials: 25,
            seed: 0,
            options: SamplerOptions::default(),
            targets: None,
            original_ids: None,
            engine: ExactEngine::default(),
        }
    }

    /// Unobserved node count.
    pub fn free_nodes(&self) -> u64 {
        (0..self.network.len())
            .filter(|&j| !self.evidence.contains(j))
            .count() as u64
    }

    /// Sampler configuration for one trial.
    pub fn config(&self, algorithm: Algorithm, iterations: u64, trial: u32) -> SamplerConfig {
        let mut c = SamplerConfig::new(
            algorithm,
            instantiation_budget(algorithm, iterations, self.free_nodes()),
            trial_seed(self.seed, algorithm, iterations, trial),
        );
        c.si_period = self.options.si_period;
        c.mb_nodes = self.options.mb_nodes.clone();
        c.restarts = self.options.restarts;
        c.init_attempts = self.options.init_attempts;
        c
    }

    fn validate(&self) -> Result<(), HarnessError> {
        if self.algorithms.is_empty() {
            return Err(HarnessError::Empty("algorithm"));
        }
        if self.iterations.is_empty() || self.iterations.contains(&0) {
            return Err(HarnessError::Empty("iteration"));
        }
        if self.trials == 0 {
            return Err(HarnessError::Empty("trial"));
        }
        if self.free_nodes() == 0 {
            return Err(HarnessError::NothingToSample);
        }
        if let Some(bad) = self
            .targets
            .iter()
            .flatten()
            .find(|&&j| j >= self.network.len())
        {
            return Err(HarnessError::UnknownTarget(*bad));
        }
        for &alg in &self.algorithms {
            for &it in &self.iterations {
                self.config(alg, it, 0).validate(&self.network, &self.evidence)?;
            }
        }
        Ok(())
    }
}

/// Natural iterations giving `algorithm` the instantiations of `iterations`
/// forward passes over `free` unobserved nodes.
pub fn instantiation_budget(algorithm: Algorithm, iterations: u64, free: u64) -> u64 {
    if algorithm.is_markov_chain() {
        iterations * free
    } else {
        iterations
    }
}

pub fn trial_seed(master: u64, algorithm: Algorithm, iterations: u64, trial: u32) -> u64 {
    derive_seed(master, &format!("{}/{iterations}", algorithm.tag()), u64::from(trial))
}

/// Restricts `exp` to the nodes needed for `targets` (ids in `exp`'s
/// network): the ancestral closure of the targets and the evidence.
pub fn prune_for_targets<T: Probability>(
    exp: &Experiment<T>,
    targets: &BTreeSet<NodeId>,
) -> Result<Experiment<T>, HarnessError> {
    if let Some(&bad) = targets.iter().find(|&&j| j >= exp.network.len()) {
        return Err(HarnessError::UnknownTarget(bad));
    }
    let keep = exp.network.relevant_nodes(targets, &exp.evidence.nodes());
    let (network, old_ids) = exp.network.induced_subnetwork(&keep)?;
    let evidence = exp.evidence.reindexed(&old_ids);
    let renumber = |j: NodeId| old_ids.binary_search(&j).ok();
    let options = SamplerOptions {
        mb_nodes: exp
            .options
            .mb_nodes
            .as_ref()
            .map(|s| s.iter().filter_map(|&j| renumber(j)).collect()),
        ..exp.options.clone()
    };
    let original_ids = match &exp.original_ids {
        Some(prev) => old_ids.iter().map(|&j| prev[j]).collect(),
        None => old_ids.clone(),
    };
    Ok(Experiment {
        network,
        evidence,
        algorithms: exp.algorithms.clone(),
        iterations: exp.iterations.clone(),
        trials: exp.trials,
        seed: exp.seed,
        options,
        targets: Some(targets.iter().filter_map(|&j| renumber(j)).collect()),
        original_ids: Some(original_ids),
        engine: exp.engine,
    })
}

/// Current estimate of a run, with standard errors.
pub fn anytime_snapshot<T: Probability>(run: &Run<'_, T>) -> PosteriorEstimate<T> {
    run.snapshot()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub algorithm: Algorithm,
    /// Base iteration count of the block.
    pub iterations: u64,
    /// Natural iterations actually run.
    pub budget: u64,
    pub trial: u32,
    pub seed: u64,
    /// `None` when the trial aborted.
    pub error: Option<f64>,
    pub wall_time_s: f64,
    pub instantiations: u64,
    pub init_instantiations: u64,
    pub abort: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlgorithmSummary {
    pub algorithm: Algorithm,
    pub iterations: u64,
    pub completed: u32,
    pub aborted: u32,
    pub mean_error: Option<f64>,
    /// Sample standard deviation over completed trials.
    pub std_dev_error: Option<f64>,
    pub mean_wall_time_s: Option<f64>,
    /// `mean_error^2 * mean_wall_time_s`.
    pub error_sq_times_time: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialReport {
    pub trials: Vec<TrialRecord>,
    pub summaries: Vec<AlgorithmSummary>,
}

impl TrialReport {
    pub fn summary(&self, algorithm: Algorithm, iterations: u64) -> Option<&AlgorithmSummary> {
        self.summaries
            .iter()
            .find(|s| s.algorithm == algorithm && s.iterations == iterations)
    }

    /// Completed-trial errors of one block, in trial order.
    pub fn errors(&self, algorithm: Algorithm, iterations: u64) -> Vec<f64> {
        self.trials
            .iter()
            .filter(|t| t.algorithm == algorithm && t.iterations == iterations)
            .filter_map(|t| t.error)
            .collect()
    }
}

/// Aggregates computed from raw trial records, grouped by block in order of
/// first appearance.
pub fn summarize(trials: &[TrialRecord]) -> Vec<AlgorithmSummary> {
    let mut keys: Vec<(Algorithm, u64)> = Vec::new();
    for t in trials {
        if !keys.contains(&(t.algorithm, t.iterations)) {
            keys.push((t.algorithm, t.iterations));
        }
    }
    keys.into_iter()
        .map(|(algorithm, iterations)| {
            let block: Vec<&TrialRecord> = trials
                .iter()
                .filter(|t| t.algorithm == algorithm && t.iterations == iterations)
                .collect();
            let done: Vec<(f64, f64)> = block
                .iter()
                .filter_map(|t| t.error.map(|e| (e, t.wall_time_s)))
                .collect();
            let n = done.len() as f64;
            let mean_error = (!done.is_empty()).then(|| done.iter().map(|d| d.0).sum::<f64>() / n);
            let mean_time = (!done.is_empty()).then(|| done.iter().map(|d| d.1).sum::<f64>() / n);
            let std_dev_error = mean_error.filter(|_| done.len() > 1).map(|m| {
                (done.iter().map(|d| (d.0 - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
            });
            AlgorithmSummary {
                algorithm,
                iterations,
                completed: done.len() as u32,
                aborted: (block.len() - done.len()) as u32,
                mean_error,
                std_dev_error,
                mean_wall_time_s: mean_time,
                error_sq_times_time: mean_error.zip(mean_time).map(|(e, t)| e * e * t),
            }
        })
        .collect()
}

/// Runs one trial against precomputed exact marginals.
pub fn run_trial<T: Probability>(
    exp: &Experiment<T>,
    exact: &MarginalTable<T>,
    algorithm: Algorithm,
    iterations: u64,
    trial: u32,
) -> Result<TrialRecord, HarnessError> {
    let config = exp.config(algorithm, iterations, trial);
    let (budget, seed) = (config.iterations, config.seed);
    let start = Instant::now();
    let mut run = Run::with_rng(&exp.network, &exp.evidence, config, seeded(seed))?;
    let outcome = run.run();
    let wall_time_s = start.elapsed().as_secs_f64();
    let Counters {
        instantiations,
        init_instantiations,
        ..
    } = run.counters();
    let mut record = TrialRecord {
        algorithm,
        iterations,
        budget,
        trial,
        seed,
        error: None,
        wall_time_s,
        instantiations,
        init_instantiations,
        abort: None,
    };
    match outcome {
        Ok(()) => {
            let est = run.snapshot();
            let e = fertig_mann_error_on(&est, exact, &exp.evidence, exp.targets.as_ref())?;
            record.error = Some(e.value.to_f64_lossless());
        }
        Err(SamplerError::Chain(e)) => {
            log::warn!("{algorithm} trial {trial} aborted: {e}");
            record.abort = Some(e.to_string());
        }
        Err(e) => return Err(e.into()),
    }
    Ok(record)
}

/// Computes the exact answer, then runs every (algorithm, iterations, trial)
/// combination in parallel on the current rayon pool.
pub fn run_experiment<T: Probability>(exp: &Experiment<T>) -> Result<TrialReport, HarnessError> {
    exp.validate()?;
    let exact = exact_posteriors(&exp.network, &exp.evidence, exp.engine)?;
    if exact.is_inconsistent() {
        return Err(HarnessError::InconsistentEvidence);
    }
    let jobs: Vec<(Algorithm, u64, u32)> = exp
        .iterations
        .iter()
        .flat_map(|&it| {
            exp.algorithms
                .iter()
                .flat_map(move |&a| (0..exp.trials).map(move |t| (a, it, t)))
        })
        .collect();
    let trials = jobs
        .into_par_iter()
        .map(|(a, it, t)| run_trial(exp, &exact, a, it, t))
        .collect::<Result<Vec<_>, _>>()?;
    let summaries = summarize(&trials);
    Ok(TrialReport { trials, summaries })
}

fn cell(v: Option<f64>, digits: usize) -> String {
    v.map_or_else(|| "-".to_owned(), |x| format!("{x:.digits$}"))
}

/// Plain-text layout: one block per iteration count, one column per
/// algorithm.
pub fn render_table(report: &TrialReport) -> String {
    let mut blocks: Vec<u64> = Vec::new();
    for s in &report.summaries {
        if !blocks.contains(&s.iterations) {
            blocks.push(s.iterations);
        }
    }
    let mut out = String::new();
    for it in blocks {
        let cols: Vec<&AlgorithmSummary> =
            report.summaries.iter().filter(|s| s.iterations == it).collect();
        let trials = cols.iter().map(|s| s.completed + s.aborted).max().unwrap_or(0);
        let width = cols
            .iter()
            .map(|s| s.algorithm.title().len())
            .max()
            .unwrap_or(0)
            .max(10);
        let _ = writeln!(out, "{it} iterations, {trials} trials");
        let _ = write!(out, "{:<16}", "");
        for s in &cols {
            let _ = write!(out, "  {:>width$}", s.algorithm.title());
        }
        out.push('\n');
        type Row = (&'static str, fn(&AlgorithmSummary) -> String);
        let rows: [Row; 4] = [
            ("mean error", |s| cell(s.mean_error, 4)),
            ("std dev", |s| cell(s.std_dev_error, 4)),
            ("time (s)", |s| cell(s.mean_wall_time_s, 5)),
            ("error^2 x time", |s| cell(s.error_sq_times_time, 7)),
        ];
        for (label, f) in rows {
            let _ = write!(out, "{label:<16}");
            for s in &cols {
                let _ = write!(out, "  {:>width$}", f(s));
            }
            out.push('\n');
        }
        if cols.iter().any(|s| s.aborted > 0) {
            let _ = write!(out, "{:<16}", "aborted");
            for s in &cols {
                let _ = write!(out, "  {:>width$}", s.aborted);
            }
            out.push('\n');
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{NetworkBuilder, Variable};

    fn coin() -> BeliefNetwork<f64> {
        let mut b = NetworkBuilder::new();
        let x = b.add_variable(Variable::binary("X")).unwrap();
        b.set_cpt(x, vec![], vec![vec![0.3, 0.7]]).unwrap();
        b.build().unwrap()
    }

    fn record(alg: Algorithm, error: Option<f64>, t: f64) -> TrialRecord {
        TrialRecord {
            algorithm: alg,
            iterations: 10,
            budget: 10,
            trial: 0,
            seed: 0,
            error,
            wall_time_s: t,
            instantiations: 10,
            init_instantiations: 0,
            abort: error.is_none().then(|| "x".into()),
        }
    }

    #[test]
    fn budget_scales_chains_only() {
        assert_eq!(instantiation_budget(Algorithm::Pearl, 100, 4), 400);
        assert_eq!(instantiation_budget(Algorithm::ChavezMb, 100, 4), 400);
        assert_eq!(instantiation_budget(Algorithm::Basic, 100, 4), 100);
    }

    #[test]
    fn summary_arithmetic() {
        let rows = vec![
            record(Algorithm::Basic, Some(0.1), 2.0),
            record(Algorithm::Basic, Some(0.3), 4.0),
            record(Algorithm::Basic, None, 100.0),
            record(Algorithm::Logic, None, 1.0),
        ];
        let s = summarize(&rows);
        assert_eq!(s.len(), 2);
        assert_eq!((s[0].completed, s[0].aborted), (2, 1));
        assert!((s[0].mean_error.unwrap() - 0.2).abs() < 1e-15);
        assert!((s[0].std_dev_error.unwrap() - 0.02f64.sqrt()).abs() < 1e-15);
        assert_eq!(s[0].mean_wall_time_s, Some(3.0));
        assert!((s[0].error_sq_times_time.unwrap() - 0.12).abs() < 1e-15);
        assert_eq!(s[1].mean_error, None);
        assert_eq!(s[1].aborted, 1);
    }

    #[test]
    fn single_node_trial() {
        let mut exp = Experiment::new(coin(), Evidence::empty());
        exp.algorithms = vec![Algorithm::Basic];
        exp.iterations = vec![1000];
        exp.trials = 1;
        let r = run_experiment(&exp).unwrap();
        assert_eq!(r.trials.len(), 1);
        assert!(r.trials[0].error.unwrap() < 0.2);
        assert!(render_table(&r).contains("Basic Algorithm"));
    }

    #[test]
    fn deterministic_given_seed() {
        let mut exp = Experiment::new(coin(), Evidence::empty());
        exp.iterations = vec![50];
        exp.trials = 3;
        exp.seed = 11;
        let a = run_experiment(&exp).unwrap();
        let b = run_experiment(&exp).unwrap();
        let errs = |r: &TrialReport| r.trials.iter().map(|t| t.error).collect::<Vec<_>>();
        assert_eq!(errs(&a), errs(&b));
    }

    #[test]
    fn validation() {
        let mut exp = Experiment::new(coin(), Evidence::empty());
        exp.trials = 0;
        assert_eq!(run_experiment(&exp).unwrap_err(), HarnessError::Empty("trial"));
        let net = coin();
        let ev = Evidence::new(&net, [(0, 1)]).unwrap();
        let exp = Experiment::new(net, ev);
        assert_eq!(run_experiment(&exp).unwrap_err(), HarnessError::NothingToSample);
    }

    #[test]
    fn pruning_keeps_ancestors() {
        // A -> B -> C, A -> D; target B, no evidence: keep A, B
        let mut b = NetworkBuilder::new();
        let ids: Vec<_> = ["A", "B", "C", "D"]
            .iter()
            .map(|n| b.add_variable(Variable::binary(*n)).unwrap())
            .collect();
        let cond = vec![vec![0.6, 0.4], vec![0.1, 0.9]];
        b.set_cpt(ids[0], vec![], vec![vec![0.5, 0.5]]).unwrap();
        b.set_cpt(ids[1], vec![ids[0]], cond.clone()).unwrap();
        b.set_cpt(ids[2], vec![ids[1]], cond.clone()).unwrap();
        b.set_cpt(ids[3], vec![ids[0]], cond).unwrap();
        let net: BeliefNetwork<f64> = b.build().unwrap();
        let exp = Experiment::new(net, Evidence::empty());
        let pruned = prune_for_targets(&exp, &BTreeSet::from([1])).unwrap();
        assert_eq!(pruned.network.len(), 2);
        assert_eq!(pruned.original_ids.as_deref(), Some(&[0, 1][..]));
        assert_eq!(pruned.targets, Some(BTreeSet::from([1])));
        let all = prune_for_targets(&exp, &BTreeSet::from([0, 1, 2, 3])).unwrap();
        assert_eq!(all.network, exp.network);
    }
}
