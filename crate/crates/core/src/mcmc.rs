//! Markov-chain baselines: single-site stochastic simulation (re-instantiate
//! one random unobserved node from its blanket conditional per iteration) and
//! the restarted variant that scores only the final state of each chain.

use rand::Rng;
use thiserror::Error;

use crate::forward::{draw, scaled_blanket, ForwardSampler};
use crate::network::{Assignment, BeliefNetwork, Evidence, NodeId};
use crate::scalar::Probability;
use crate::scores::ScoreTable;

/// Default number of forward passes tried when initialising a chain.
pub const DEFAULT_INIT_ATTEMPTS: u32 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum ChainError {
    #[error("no forward pass consistent with the evidence in {attempts} attempts")]
    InitializationFailed { attempts: u32 },
    #[error("every node is observed; there is nothing to simulate")]
    NothingToSample,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scoring {
    /// Score the re-instantiated state with weight 1.
    #[default]
    Plain,
    /// Score every state with its blanket conditional probability.
    MarkovBlanket,
}

/// Current state of one chain; evidence nodes hold their observed values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainState {
    values: Vec<usize>,
    free: Vec<NodeId>,
    iteration: u64,
}

impl ChainState {
    /// Starts a chain from a basic-algorithm forward pass, retrying while the
    /// pass is inconsistent with the evidence.
    pub fn initialize<T: Probability, R: Rng + ?Sized>(
        net: &BeliefNetwork<T>,
        ev: &Evidence,
        rng: &mut R,
        attempts: u32,
    ) -> Result<Self, ChainError> {
        let free: Vec<NodeId> = (0..net.len()).filter(|&j| !ev.contains(j)).collect();
        if free.is_empty() {
            return Err(ChainError::NothingToSample);
        }
        let mut fwd = ForwardSampler::new(net, ev);
        fwd.consistent_basic(rng, attempts)
            .ok_or(ChainError::InitializationFailed { attempts })?;
        Ok(Self {
            values: fwd.values().to_vec(),
            free,
            iteration: 0,
        })
    }

    pub fn values(&self) -> &[usize] {
        &self.values
    }

    pub fn assignment(&self) -> Assignment {
        Assignment::complete(self.values.clone())
    }

    /// Unobserved nodes, in id order.
    pub fn free_nodes(&self) -> &[NodeId] {
        &self.free
    }

    pub fn iteration(&self) -> u64 {
        self.iteration
    }
}

/// Result of one re-instantiation.
#[derive(Debug, Clone, PartialEq)]
pub struct Resample<T> {
    pub node: NodeId,
    pub state: usize,
    /// Normalized blanket conditional; `None` when every substitution had
    /// probability zero and the node kept its value.
    pub conditional: Option<Vec<T>>,
}

impl<T: Probability> Resample<T> {
    /// Scores this resample into `table`.
    pub fn emit(&self, table: &mut ScoreTable, scoring: Scoring) {
        match (scoring, &self.conditional) {
            (Scoring::MarkovBlanket, Some(w)) => table.emit_weights(self.node, w, T::one()),
            _ => table.emit_state(self.node, self.state, T::one()),
        }
    }
}

/// Picks an unobserved node uniformly and redraws it from its blanket
/// conditional.
pub fn pearl_step<T: Probability, R: Rng + ?Sized>(
    net: &BeliefNetwork<T>,
    state: &mut ChainState,
    rng: &mut R,
) -> Resample<T> {
    let node = state.free[rng.random_range(0..state.free.len())];
    let mut w = vec![T::zero(); net.cardinality(node)];
    state.iteration += 1;
    match scaled_blanket(net, &state.values, node, T::one(), &mut w) {
        Ok(()) => {
            let s = draw(&w, rng);
            state.values[node] = s;
            Resample {
                node,
                state: s,
                conditional: Some(w),
            }
        }
        Err(_) => Resample {
            node,
            state: state.values[node],
            conditional: None,
        },
    }
}

/// Scores every unobserved node of the chain's current state.
pub fn score_chain_state<T: Probability>(
    net: &BeliefNetwork<T>,
    state: &ChainState,
    scoring: Scoring,
    table: &mut ScoreTable,
) {
    let mut w = Vec::new();
    for &j in &state.free {
        let s = state.values[j];
        if scoring == Scoring::MarkovBlanket {
            w.resize(net.cardinality(j), T::zero());
            if scaled_blanket(net, &state.values, j, T::one(), &mut w).is_ok() {
                table.emit_weights(j, &w, T::one());
                continue;
            }
        }
        table.emit_state(j, s, T::one());
    }
}

/// Lengths of the restart segments: `budget` split evenly over `restarts`
/// chains with the remainder added to the last one.
pub fn restart_schedule(budget: u64, restarts: u64) -> Vec<u64> {
    let restarts = restarts.max(1);
    let base = budget / restarts;
    let mut out = vec![base; restarts as usize];
    if let Some(last) = out.last_mut() {
        *last += budget - base * restarts;
    }
    out
}

/// `restarts` independent chains sharing `budget` resampling steps; each
/// chain is scored once, at its end.
pub fn chavez_run<T: Probability, R: Rng + ?Sized>(
    net: &BeliefNetwork<T>,
    ev: &Evidence,
    budget: u64,
    restarts: u64,
    rng: &mut R,
    scoring: Scoring,
) -> Result<ScoreTable, ChainError> {
    let mut table = ScoreTable::new(net, ev);
    for steps in restart_schedule(budget, restarts) {
        let mut chain = ChainState::initialize(net, ev, rng, DEFAULT_INIT_ATTEMPTS)?;
        for _ in 0..steps {
            pearl_step(net, &mut chain, rng);
        }
        score_chain_state(net, &chain, scoring, &mut table);
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{NetworkBuilder, Variable};
    use crate::rng::seeded;

    fn single() -> BeliefNetwork<f64> {
        let mut b = NetworkBuilder::new();
        let x = b.add_variable(Variable::binary("X")).unwrap();
        b.set_cpt(x, vec![], vec![vec![0.9, 0.1]]).unwrap();
        b.build().unwrap()
    }

    #[test]
    fn schedule_splits_budget() {
        assert_eq!(restart_schedule(100, 10), vec![10; 10]);
        assert_eq!(restart_schedule(25, 4), vec![6, 6, 6, 7]);
        assert_eq!(restart_schedule(3, 3), vec![1, 1, 1]);
    }

    #[test]
    fn mb_emission_on_single_node_is_prior() {
        let net = single();
        let mut rng = seeded(2);
        let mut chain = ChainState::initialize(&net, &Evidence::empty(), &mut rng, 10).unwrap();
        for _ in 0..50 {
            let r = pearl_step(&net, &mut chain, &mut rng);
            assert_eq!(r.conditional.as_deref(), Some(&[0.9, 0.1][..]));
        }
        assert_eq!(chain.iteration(), 50);
    }

    #[test]
    fn pinned_node_never_moves() {
        // X -> Y with Y = X deterministically and Y observed true: X is pinned
        let mut b = NetworkBuilder::new();
        let x = b.add_variable(Variable::binary("X")).unwrap();
        let y = b.add_variable(Variable::binary("Y")).unwrap();
        b.set_cpt(x, vec![], vec![vec![0.5, 0.5]]).unwrap();
        b.set_cpt(y, vec![x], vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let net: BeliefNetwork<f64> = b.build().unwrap();
        let ev = Evidence::new(&net, [(1, 1)]).unwrap();
        let mut rng = seeded(4);
        let mut chain = ChainState::initialize(&net, &ev, &mut rng, 100).unwrap();
        assert_eq!(chain.values(), &[1, 1]);
        for _ in 0..200 {
            let r = pearl_step(&net, &mut chain, &mut rng);
            assert_eq!(r.state, 1);
            assert_eq!(chain.values()[1], 1);
        }
    }

    #[test]
    fn initialization_failure() {
        let mut b = NetworkBuilder::new();
        let x = b.add_variable(Variable::binary("X")).unwrap();
        let y = b.add_variable(Variable::binary("Y")).unwrap();
        b.set_cpt(x, vec![], vec![vec![0.5, 0.5]]).unwrap();
        b.set_cpt(y, vec![x], vec![vec![1.0, 0.0], vec![1.0, 0.0]]).unwrap();
        let net: BeliefNetwork<f64> = b.build().unwrap();
        let ev = Evidence::new(&net, [(1, 1)]).unwrap();
        assert_eq!(
            ChainState::initialize(&net, &ev, &mut seeded(0), 7),
            Err(ChainError::InitializationFailed { attempts: 7 })
        );
        let all = Evidence::new(&net, [(0, 1), (1, 0)]).unwrap();
        assert_eq!(
            ChainState::initialize(&net, &all, &mut seeded(0), 7),
            Err(ChainError::NothingToSample)
        );
    }

    #[test]
    fn chavez_scores_once_per_restart() {
        let net = single();
        let t = chavez_run(&net, &Evidence::empty(), 40, 10, &mut seeded(9), Scoring::Plain).unwrap();
        assert_eq!(t.emissions(0), 10);
        let t = chavez_run(&net, &Evidence::empty(), 10, 10, &mut seeded(9), Scoring::MarkovBlanket)
            .unwrap();
        assert_eq!(t.emissions(0), 10);
        assert!((t.score(0, 0) - 9.0).abs() < 1e-12);
    }
}
