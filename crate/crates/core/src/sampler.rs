//! Algorithm selection and the resumable run driver shared by the CLI and the
//! benchmark harness.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::forward::{scaled_blanket, ForwardSampler};
use crate::importance::{heuristic_importance_build, ImportanceDistribution, SelfImportanceAccumulator};
use crate::mcmc::{pearl_step, restart_schedule, score_chain_state, ChainError, ChainState, Scoring};
use crate::network::{BeliefNetwork, Evidence, NodeId};
use crate::rng::{self, SimRng};
use crate::scalar::Probability;
use crate::scores::{PosteriorEstimate, ScoreTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    Logic,
    Basic,
    BasicMb,
    SelfImportance,
    HeuristicImportance,
    Pearl,
    PearlMb,
    Chavez,
    ChavezMb,
}

impl Algorithm {
    pub const ALL: [Algorithm; 9] = [
        Algorithm::Logic,
        Algorithm::Basic,
        Algorithm::BasicMb,
        Algorithm::SelfImportance,
        Algorithm::HeuristicImportance,
        Algorithm::Pearl,
        Algorithm::PearlMb,
        Algorithm::Chavez,
        Algorithm::ChavezMb,
    ];

    /// Command-line tag.
    pub fn tag(self) -> &'static str {
        match self {
            Algorithm::Logic => "logic",
            Algorithm::Basic => "basic",
            Algorithm::BasicMb => "basic-mb",
            Algorithm::SelfImportance => "self-importance",
            Algorithm::HeuristicImportance => "heuristic-importance",
            Algorithm::Pearl => "pearl",
            Algorithm::PearlMb => "pearl-mb",
            Algorithm::Chavez => "chavez",
            Algorithm::ChavezMb => "chavez-mb",
        }
    }

    /// Column heading used in report tables.
    pub fn title(self) -> &'static str {
        match self {
            Algorithm::Logic => "Logic Sampling",
            Algorithm::Basic => "Basic Algorithm",
            Algorithm::BasicMb => "Markov Blanket",
            Algorithm::SelfImportance => "Self Importance",
            Algorithm::HeuristicImportance => "Heuristic Importance",
            Algorithm::Pearl => "Pearl",
            Algorithm::PearlMb => "Pearl with M. Blanket",
            Algorithm::Chavez => "Chavez",
            Algorithm::ChavezMb => "Chavez with M. Blanket",
        }
    }

    /// Resamples one node per iteration rather than a whole network.
    pub fn is_markov_chain(self) -> bool {
        matches!(
            self,
            Algorithm::Pearl | Algorithm::PearlMb | Algorithm::Chavez | Algorithm::ChavezMb
        )
    }

    pub fn scoring(self) -> Scoring {
        match self {
            Algorithm::BasicMb | Algorithm::PearlMb | Algorithm::ChavezMb => Scoring::MarkovBlanket,
            _ => Scoring::Plain,
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl Serialize for Algorithm {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.tag())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown algorithm `{0}`")]
pub struct UnknownAlgorithm(pub String);

impl FromStr for Algorithm {
    type Err = UnknownAlgorithm;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.tag() == s)
            .ok_or_else(|| UnknownAlgorithm(s.to_owned()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SamplerError {
    #[error("iteration count must be at least 1")]
    NoIterations,
    #[error("self-importance update period must be at least 1")]
    ZeroPeriod,
    #[error("restart count must be between 1 and the iteration count ({iterations}); got {restarts}")]
    Restarts { restarts: u64, iterations: u64 },
    #[error("Markov-blanket node {0} is unknown or observed")]
    BlanketNode(NodeId),
    #[error(transparent)]
    Chain(#[from] ChainError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SamplerConfig {
    pub algorithm: Algorithm,
    /// Natural iterations: whole-network passes for forward samplers,
    /// single-node resamples for Markov-chain samplers.
    pub iterations: u64,
    pub seed: u64,
    /// Self-importance update period, in iterations.
    pub si_period: u64,
    /// Nodes receiving Markov-blanket scoring under `basic-mb`; `None` means
    /// every unobserved node.
    pub mb_nodes: Option<BTreeSet<NodeId>>,
    /// Independent chains per run for the restarted samplers.
    pub restarts: u64,
    pub init_attempts: u32,
}

impl SamplerConfig {
    pub fn new(algorithm: Algorithm, iterations: u64, seed: u64) -> Self {
        Self {
            algorithm,
            iterations,
            seed,
            si_period: 100,
            mb_nodes: None,
            restarts: 10,
            init_attempts: crate::mcmc::DEFAULT_INIT_ATTEMPTS,
        }
    }

    pub fn validate<T: Probability>(
        &self,
        net: &BeliefNetwork<T>,
        ev: &Evidence,
    ) -> Result<(), SamplerError> {
        if self.iterations == 0 {
            return Err(SamplerError::NoIterations);
        }
        if self.si_period == 0 {
            return Err(SamplerError::ZeroPeriod);
        }
        if matches!(self.algorithm, Algorithm::Chavez | Algorithm::ChavezMb)
            && (self.restarts == 0 || self.restarts > self.iterations)
        {
            return Err(SamplerError::Restarts {
                restarts: self.restarts,
                iterations: self.iterations,
            });
        }
        if let Some(nodes) = &self.mb_nodes {
            if let Some(&bad) = nodes.iter().find(|&&j| j >= net.len() || ev.contains(j)) {
                return Err(SamplerError::BlanketNode(bad));
            }
        }
        Ok(())
    }
}

/// Instrumentation for one run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Counters {
    /// Natural iterations completed.
    pub iterations: u64,
    /// Values assigned to unobserved variables by the sampling loop.
    pub instantiations: u64,
    /// Values assigned while initialising chains (not part of the budget).
    pub init_instantiations: u64,
    /// Chains started.
    pub chains: u64,
    /// Resamples where every blanket substitution had probability zero.
    pub stuck_resamples: u64,
}

#[derive(Debug, Clone)]
enum Engine<T> {
    Forward {
        mb_mask: Vec<bool>,
        importance: Option<ImportanceDistribution<T>>,
        pending: Option<SelfImportanceAccumulator<T>>,
        weights: Vec<T>,
    },
    Chain {
        chain: Option<ChainState>,
        /// Remaining steps in each restart segment, last segment first.
        segments: Vec<u64>,
        score_each_step: bool,
    },
}

/// A sampler run that can be advanced one iteration at a time and inspected
/// between iterations.
#[derive(Debug, Clone)]
pub struct Run<'a, T: Probability> {
    net: &'a BeliefNetwork<T>,
    ev: &'a Evidence,
    config: SamplerConfig,
    rng: SimRng,
    fwd: ForwardSampler<'a, T>,
    free: usize,
    table: ScoreTable,
    engine: Engine<T>,
    counters: Counters,
}

impl<'a, T: Probability> Run<'a, T> {
    pub fn new(
        net: &'a BeliefNetwork<T>,
        ev: &'a Evidence,
        config: SamplerConfig,
    ) -> Result<Self, SamplerError> {
        let rng = rng::seeded(config.seed);
        Self::with_rng(net, ev, config, rng)
    }

    pub fn with_rng(
        net: &'a BeliefNetwork<T>,
        ev: &'a Evidence,
        config: SamplerConfig,
        rng: SimRng,
    ) -> Result<Self, SamplerError> {
        config.validate(net, ev)?;
        let n = net.len();
        let free = (0..n).filter(|&j| !ev.contains(j)).count();
        let engine = match config.algorithm {
            Algorithm::Pearl | Algorithm::PearlMb => Engine::Chain {
                chain: None,
                segments: vec![config.iterations],
                score_each_step: true,
            },
            Algorithm::Chavez | Algorithm::ChavezMb => {
                let mut segments = restart_schedule(config.iterations, config.restarts);
                segments.reverse();
                Engine::Chain {
                    chain: None,
                    segments,
                    score_each_step: false,
                }
            }
            alg => {
                let mb_mask = (0..n)
                    .map(|j| {
                        alg == Algorithm::BasicMb
                            && !ev.contains(j)
                            && config.mb_nodes.as_ref().is_none_or(|s| s.contains(&j))
                    })
                    .collect();
                let importance = match alg {
                    Algorithm::SelfImportance => Some(ImportanceDistribution::prior(net, ev)),
                    Algorithm::HeuristicImportance => Some(heuristic_importance_build(net, ev)),
                    _ => None,
                };
                let pending = (alg == Algorithm::SelfImportance).then(SelfImportanceAccumulator::default);
                Engine::Forward {
                    mb_mask,
                    importance,
                    pending,
                    weights: Vec::new(),
                }
            }
        };
        Ok(Self {
            net,
            ev,
            fwd: ForwardSampler::new(net, ev),
            free,
            table: ScoreTable::new(net, ev),
            config,
            rng,
            engine,
            counters: Counters::default(),
        })
    }

    /// Replaces the random stream; the next iteration draws from `rng`.
    pub fn replace_rng(&mut self, rng: SimRng) {
        self.rng = rng;
    }

    pub fn config(&self) -> &SamplerConfig {
        &self.config
    }

    pub fn counters(&self) -> Counters {
        self.counters
    }

    pub fn completed(&self) -> u64 {
        self.counters.iterations
    }

    pub fn is_finished(&self) -> bool {
        self.counters.iterations >= self.config.iterations
    }

    pub fn table(&self) -> &ScoreTable {
        &self.table
    }

    pub fn into_table(self) -> ScoreTable {
        self.table
    }

    /// Current selection distribution of the importance samplers.
    pub fn importance_distribution(&self) -> Option<&ImportanceDistribution<T>> {
        match &self.engine {
            Engine::Forward { importance, .. } => importance.as_ref(),
            Engine::Chain { .. } => None,
        }
    }

    /// Normalized estimate with standard errors from everything scored so far.
    pub fn snapshot(&self) -> PosteriorEstimate<T> {
        self.table.normalize()
    }

    /// One natural iteration. Extra calls past the budget are allowed and
    /// keep sampling.
    pub fn step(&mut self) -> Result<(), SamplerError> {
        match &mut self.engine {
            Engine::Forward {
                mb_mask,
                importance,
                pending,
                weights,
            } => {
                let z = match (self.config.algorithm, importance.as_ref()) {
                    (Algorithm::Logic, _) => self.fwd.logic(&mut self.rng),
                    (_, Some(dist)) => self.fwd.importance(dist, &mut self.rng),
                    _ => self.fwd.basic(&mut self.rng),
                };
                self.counters.instantiations += self.free as u64;
                self.table.record_sample(z);
                let values = self.fwd.values();
                for j in 0..self.net.len() {
                    if self.ev.contains(j) {
                        continue;
                    }
                    if mb_mask[j] {
                        weights.resize(self.net.cardinality(j), T::zero());
                        if scaled_blanket(self.net, values, j, z, weights).is_ok() {
                            self.table.emit_weights(j, weights, z);
                            continue;
                        }
                    }
                    self.table.emit_state(j, values[j], z);
                }
                if let (Some(acc), Some(dist)) = (pending.as_mut(), importance.as_mut()) {
                    acc.add(self.net, dist, values, z);
                    if (self.counters.iterations + 1).is_multiple_of(self.config.si_period) {
                        acc.apply(self.net, dist);
                    }
                }
            }
            Engine::Chain {
                chain,
                segments,
                score_each_step,
            } => {
                if chain.is_none() {
                    *chain = Some(ChainState::initialize(
                        self.net,
                        self.ev,
                        &mut self.rng,
                        self.config.init_attempts,
                    )?);
                    self.counters.chains += 1;
                    self.counters.init_instantiations += self.free as u64;
                }
                let state = chain.as_mut().expect("initialized");
                let resample = pearl_step(self.net, state, &mut self.rng);
                self.counters.instantiations += 1;
                if resample.conditional.is_none() {
                    self.counters.stuck_resamples += 1;
                }
                if *score_each_step {
                    resample.emit(&mut self.table, self.config.algorithm.scoring());
                } else if let Some(left) = segments.last_mut() {
                    *left = left.saturating_sub(1);
                    if *left == 0 {
                        score_chain_state(self.net, state, self.config.algorithm.scoring(), &mut self.table);
                        segments.pop();
                        *chain = None;
                    }
                }
            }
        }
        self.counters.iterations += 1;
        Ok(())
    }

    /// Runs up to `n` more iterations without passing the budget.
    pub fn advance(&mut self, n: u64) -> Result<(), SamplerError> {
        for _ in 0..n {
            if self.is_finished() {
                break;
            }
            self.step()?;
        }
        Ok(())
    }

    /// Runs to the end of the budget.
    pub fn run(&mut self) -> Result<(), SamplerError> {
        while !self.is_finished() {
            self.step()?;
        }
        Ok(())
    }
}

/// Runs `config` to completion and returns the score table and counters.
pub fn run_sampler<T: Probability>(
    net: &BeliefNetwork<T>,
    ev: &Evidence,
    config: SamplerConfig,
) -> Result<(ScoreTable, Counters), SamplerError> {
    let mut run = Run::new(net, ev, config)?;
    run.run()?;
    let counters = run.counters();
    Ok((run.into_table(), counters))
}
