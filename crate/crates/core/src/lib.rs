//! Stochastic simulation of Bayesian belief networks: forward samplers with
//! sample scoring, Markov-chain baselines, exact inference for reference
//! answers, and an experiment harness that compares them.
//!
//! Numeric code is generic over [`Probability`] (`f32` or `f64`); the
//! aliases below fix the common `f64` instantiations.

pub mod accumulate;
pub mod bundled;
pub mod exact;
pub mod format;
pub mod forward;
pub mod harness;
pub mod importance;
pub mod mcmc;
pub mod metrics;
pub mod network;
pub mod rng;
pub mod sampler;
pub mod scalar;
pub mod scores;

pub use exact::{exact_posteriors, ExactEngine, ExactError, MarginalTable};
pub use harness::{run_experiment, Experiment, TrialReport};
pub use format::{load_evidence, load_network, serialize_evidence, serialize_network};
pub use metrics::{fertig_mann_error, ErrorValue, MetricError};
pub use network::{
    Assignment, BeliefNetwork, Cpt, Evidence, NetworkBuilder, NetworkError, NodeId, Variable,
};
pub use sampler::{run_sampler, Algorithm, Counters, Run, SamplerConfig, SamplerError};
pub use scalar::Probability;
pub use scores::{NodeEstimate, PosteriorEstimate, ScoreError, ScoreTable};

pub type Network = BeliefNetwork<f64>;
pub type Network32 = BeliefNetwork<f32>;
pub type Marginals = MarginalTable<f64>;
pub type Estimate = PosteriorEstimate<f64>;
pub type Builder = NetworkBuilder<f64>;
