//! Accumulated sample scores and the posterior estimates derived from them.
//!
//! A [`ScoreTable`] is a sum over emissions. Each emission for node `j`
//! carries a base weight `b` (the sample score `Z`, or 1 for Markov-chain
//! samplers) and a per-state contribution `a_s` that sums to `b`. The table
//! keeps `sum a`, `sum a^2` and `sum a*b` per state and `sum b`, `sum b^2`
//! per node, which is enough for the ratio estimate `sum a / sum b` and its
//! delta-method standard error. All sums are exact, so merging tables is
//! associative and commutative down to the last bit.

use std::hash::{DefaultHasher, Hash, Hasher};

use thiserror::Error;

use crate::accumulate::ExactSum;
use crate::exact::MarginalTable;
use crate::network::{BeliefNetwork, Evidence, NodeId};
use crate::scalar::Probability;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScoreError {
    #[error("score tables belong to different network/evidence pairs")]
    SignatureMismatch,
    #[error("fewer than two scored emissions on every node")]
    InsufficientSamples,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct CellSums {
    score: ExactSum,
    score_sq: ExactSum,
    score_base: ExactSum,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct NodeSums {
    base: ExactSum,
    base_sq: ExactSum,
    emissions: u64,
}

/// Additive estimator state for one network/evidence pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScoreTable {
    signature: u64,
    cells: Vec<Vec<CellSums>>,
    nodes: Vec<NodeSums>,
    total: ExactSum,
    total_sq: ExactSum,
    samples: u64,
}

/// Identifies a network/evidence pair for merge compatibility.
pub fn signature<T: Probability>(net: &BeliefNetwork<T>, ev: &Evidence) -> u64 {
    let mut h = DefaultHasher::new();
    net.fingerprint().hash(&mut h);
    ev.hash(&mut h);
    h.finish()
}

impl ScoreTable {
    /// Empty table scoring every unobserved node of `net`.
    pub fn new<T: Probability>(net: &BeliefNetwork<T>, ev: &Evidence) -> Self {
        let cards = (0..net.len())
            .map(|j| if ev.contains(j) { 0 } else { net.cardinality(j) })
            .collect();
        Self::with_shape(signature(net, ev), cards)
    }

    /// Empty table with `cards[j]` states for node `j` (0 = not scored).
    pub fn with_shape(signature: u64, cards: Vec<usize>) -> Self {
        Self {
            signature,
            cells: cards.iter().map(|&c| vec![CellSums::default(); c]).collect(),
            nodes: vec![NodeSums::default(); cards.len()],
            total: ExactSum::new(),
            total_sq: ExactSum::new(),
            samples: 0,
        }
    }

    /// An empty table with the same shape and signature.
    pub fn empty_like(&self) -> Self {
        Self::with_shape(self.signature, self.cells.iter().map(Vec::len).collect())
    }

    pub fn signature(&self) -> u64 {
        self.signature
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn is_scored(&self, node: NodeId) -> bool {
        !self.cells[node].is_empty()
    }

    /// Records the score `Z` of one complete sample.
    pub fn record_sample<T: Probability>(&mut self, z: T) {
        let z = z.to_f64_lossless();
        self.total.add(z);
        self.total_sq.add(z * z);
        self.samples += 1;
    }

    /// Scores `state` of `node` with weight `base`.
    pub fn emit_state<T: Probability>(&mut self, node: NodeId, state: usize, base: T) {
        let b = base.to_f64_lossless();
        self.emit_base(node, b);
        let cell = &mut self.cells[node][state];
        cell.score.add(b);
        cell.score_sq.add(b * b);
        cell.score_base.add(b * b);
    }

    /// Scores every state of `node`: `weights` already include the base
    /// weight and sum to it.
    pub fn emit_weights<T: Probability>(&mut self, node: NodeId, weights: &[T], base: T) {
        let b = base.to_f64_lossless();
        self.emit_base(node, b);
        for (cell, w) in self.cells[node].iter_mut().zip(weights) {
            let a = w.to_f64_lossless();
            cell.score.add(a);
            cell.score_sq.add(a * a);
            cell.score_base.add(a * b);
        }
    }

    fn emit_base(&mut self, node: NodeId, b: f64) {
        debug_assert!(self.is_scored(node), "node {node} is not scored");
        let n = &mut self.nodes[node];
        n.base.add(b);
        n.base_sq.add(b * b);
        n.emissions += 1;
    }

    /// Accumulated `Z{X_node = state}`.
    pub fn score(&self, node: NodeId, state: usize) -> f64 {
        self.cells[node][state].score.value()
    }

    pub fn emissions(&self, node: NodeId) -> u64 {
        self.nodes[node].emissions
    }

    pub fn samples(&self) -> u64 {
        self.samples
    }

    pub fn sum_z(&self) -> f64 {
        self.total.value()
    }

    pub fn sum_z_sq(&self) -> f64 {
        self.total_sq.value()
    }

    /// Adds every accumulator of `other` into `self`.
    pub fn merge(&mut self, other: &ScoreTable) -> Result<(), ScoreError> {
        if self.signature != other.signature
            || self.cells.len() != other.cells.len()
            || self.cells.iter().zip(&other.cells).any(|(a, b)| a.len() != b.len())
        {
            return Err(ScoreError::SignatureMismatch);
        }
        for (mine, theirs) in self.cells.iter_mut().zip(&other.cells) {
            for (a, b) in mine.iter_mut().zip(theirs) {
                a.score.merge(&b.score);
                a.score_sq.merge(&b.score_sq);
                a.score_base.merge(&b.score_base);
            }
        }
        for (a, b) in self.nodes.iter_mut().zip(&other.nodes) {
            a.base.merge(&b.base);
            a.base_sq.merge(&b.base_sq);
            a.emissions += b.emissions;
        }
        self.total.merge(&other.total);
        self.total_sq.merge(&other.total_sq);
        self.samples += other.samples;
        Ok(())
    }

    pub fn merged(mut self, other: &ScoreTable) -> Result<ScoreTable, ScoreError> {
        self.merge(other)?;
        Ok(self)
    }

    fn node_standard_error(&self, node: NodeId) -> Option<Vec<f64>> {
        let sums = &self.nodes[node];
        let base = sums.base.value();
        if sums.emissions < 2 || base <= 0.0 {
            return None;
        }
        let base_sq = sums.base_sq.value();
        Some(
            self.cells[node]
                .iter()
                .map(|c| {
                    let ratio = c.score.value() / base;
                    let resid = c.score_sq.value() - 2.0 * ratio * c.score_base.value()
                        + ratio * ratio * base_sq;
                    resid.max(0.0).sqrt() / base
                })
                .collect(),
        )
    }

    /// Delta-method standard error of every estimated probability:
    /// `sqrt(sum (a_i - R b_i)^2) / sum b_i` with `R = sum a / sum b`.
    /// Nodes with fewer than two emissions or no weight get `None`.
    pub fn standard_error<T: Probability>(&self) -> Result<Vec<Option<Vec<T>>>, ScoreError> {
        if self.nodes.iter().all(|n| n.emissions < 2) {
            return Err(ScoreError::InsufficientSamples);
        }
        Ok((0..self.len())
            .map(|j| {
                self.node_standard_error(j)
                    .map(|v| v.into_iter().map(T::from_f64_lossy).collect())
            })
            .collect())
    }

    /// Normalizes scores per node into probabilities.
    pub fn normalize<T: Probability>(&self) -> PosteriorEstimate<T> {
        let nodes = (0..self.len())
            .map(|j| {
                if !self.is_scored(j) {
                    return None;
                }
                let scores: Vec<f64> = self.cells[j].iter().map(|c| c.score.value()).collect();
                let mut total = ExactSum::new();
                for c in &self.cells[j] {
                    total.merge(&c.score);
                }
                let total = total.value();
                let card = scores.len();
                let (probabilities, all_zero) = if total > 0.0 {
                    (scores.iter().map(|&s| T::from_f64_lossy(s / total)).collect(), false)
                } else {
                    (vec![T::from_f64_lossy(1.0 / card as f64); card], true)
                };
                let standard_errors = self
                    .node_standard_error(j)
                    .map(|v| v.into_iter().map(T::from_f64_lossy).collect());
                Some(NodeEstimate {
                    probabilities,
                    standard_errors,
                    all_zero,
                })
            })
            .collect();
        PosteriorEstimate { nodes }
    }
}

/// Shorthand for [`ScoreTable::normalize`].
pub fn normalize<T: Probability>(table: &ScoreTable) -> PosteriorEstimate<T> {
    table.normalize()
}

/// Shorthand for [`ScoreTable::merged`] on borrowed tables.
pub fn merge(a: &ScoreTable, b: &ScoreTable) -> Result<ScoreTable, ScoreError> {
    a.clone().merged(b)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeEstimate<T> {
    pub probabilities: Vec<T>,
    pub standard_errors: Option<Vec<T>>,
    /// No score has reached this node yet; probabilities are uniform.
    pub all_zero: bool,
}

/// Normalized estimate `P^(X_j | x*_E)` for every scored node.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorEstimate<T> {
    nodes: Vec<Option<NodeEstimate<T>>>,
}

impl<T: Probability> PosteriorEstimate<T> {
    pub fn node(&self, node: NodeId) -> Option<&NodeEstimate<T>> {
        self.nodes[node].as_ref()
    }

    pub fn probabilities(&self, node: NodeId) -> Option<&[T]> {
        self.nodes[node].as_ref().map(|n| n.probabilities.as_slice())
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (NodeId, &NodeEstimate<T>)> + '_ {
        self.nodes
            .iter()
            .enumerate()
            .filter_map(|(j, n)| n.as_ref().map(|n| (j, n)))
    }

    /// Largest absolute deviation from exact marginals over nodes present in
    /// both.
    pub fn max_abs_error(&self, exact: &MarginalTable<T>) -> T {
        self.iter()
            .filter_map(|(j, n)| exact.marginal(j).map(|m| (n, m)))
            .flat_map(|(n, m)| n.probabilities.iter().zip(m).map(|(a, b)| (*a - *b).abs()))
            .fold(T::zero(), T::max)
    }
}
