//! Forward samplers: every variable is simulated in topological order and the
//! complete sample receives a score
//!
//! ```text
//! Z = P(sample) / P(selecting sample)
//! ```
//!
//! * logic sampling simulates every variable from its CPT; `Z` is 1 when the
//!   simulated evidence matches the observation and 0 otherwise.
//! * the basic algorithm clamps evidence nodes and simulates the rest from
//!   their CPTs; `Z` is the evidence likelihood `prod_{k in E} P(x*_k | pa)`.
//! * the importance algorithm simulates unobserved nodes from a replacement
//!   distribution `P'` and scores `Z = prod_N P / prod_{N \ E} P'`.
//!
//! Markov-blanket scoring spreads a sample's score over every state of a
//! node in proportion to the node's blanket conditional.

use rand::Rng;
use thiserror::Error;

use crate::importance::ImportanceDistribution;
use crate::network::{Assignment, BeliefNetwork, Evidence, NodeId};
use crate::scalar::Probability;

/// A complete sample and its score.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleScore<T> {
    pub weight: T,
    pub assignment: Assignment,
}

/// Every blanket substitution has probability zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("Markov blanket weights of node {node} are all zero")]
pub struct DegenerateBlanket {
    pub node: NodeId,
}

/// Draws a state from a probability row. States with zero probability are
/// never returned; rounding slack at the top goes to the last positive state.
#[inline]
pub fn draw<T: Probability, R: Rng + ?Sized>(row: &[T], rng: &mut R) -> usize {
    let u = T::from_f64_lossy(rng.random::<f64>());
    let mut cum = T::zero();
    let mut last = 0;
    for (s, &p) in row.iter().enumerate() {
        if p > T::zero() {
            cum = cum + p;
            last = s;
            if u < cum {
                return s;
            }
        }
    }
    last
}

/// Reusable forward-sampling workspace for one network and evidence set.
#[derive(Debug, Clone)]
pub struct ForwardSampler<'a, T> {
    net: &'a BeliefNetwork<T>,
    evidence: Vec<Option<usize>>,
    values: Vec<usize>,
}

impl<'a, T: Probability> ForwardSampler<'a, T> {
    pub fn new(net: &'a BeliefNetwork<T>, ev: &Evidence) -> Self {
        let evidence = ev.dense(net.len());
        let values = evidence.iter().map(|s| s.unwrap_or(0)).collect();
        Self {
            net,
            evidence,
            values,
        }
    }

    /// State vector of the most recent sample.
    pub fn values(&self) -> &[usize] {
        &self.values
    }

    pub fn evidence(&self) -> &[Option<usize>] {
        &self.evidence
    }

    /// Logic sampling: simulate everything, score the evidence match.
    pub fn logic<R: Rng + ?Sized>(&mut self, rng: &mut R) -> T {
        let mut matched = true;
        for &j in self.net.topological_order() {
            let cpt = self.net.cpt(j);
            let s = draw(cpt.row(cpt.row_index(&self.values)), rng);
            self.values[j] = s;
            if let Some(obs) = self.evidence[j] {
                matched &= obs == s;
            }
        }
        if matched {
            T::one()
        } else {
            T::zero()
        }
    }

    /// Basic algorithm: clamp evidence, weight by its likelihood.
    pub fn basic<R: Rng + ?Sized>(&mut self, rng: &mut R) -> T {
        let mut z = T::one();
        for &j in self.net.topological_order() {
            let cpt = self.net.cpt(j);
            let row = cpt.row(cpt.row_index(&self.values));
            match self.evidence[j] {
                Some(obs) => {
                    self.values[j] = obs;
                    z = z * row[obs];
                }
                None => self.values[j] = draw(row, rng),
            }
        }
        z
    }

    /// Importance algorithm with selection distribution `dist`.
    ///
    /// The score is accumulated node by node as `P(x*_k)` for evidence and
    /// `P / P'` otherwise, so with `P' = P` every unobserved factor is
    /// exactly 1 and the result equals [`ForwardSampler::basic`] bit for bit.
    pub fn importance<R: Rng + ?Sized>(
        &mut self,
        dist: &ImportanceDistribution<T>,
        rng: &mut R,
    ) -> T {
        let mut z = T::one();
        for &j in self.net.topological_order() {
            let cpt = self.net.cpt(j);
            let r = cpt.row_index(&self.values);
            match self.evidence[j] {
                Some(obs) => {
                    self.values[j] = obs;
                    z = z * cpt.row(r)[obs];
                }
                None => {
                    let proposal = dist.row(j, r);
                    let s = draw(proposal, rng);
                    self.values[j] = s;
                    z = z * (cpt.row(r)[s] / proposal[s]);
                }
            }
        }
        z
    }

    /// Runs a chain-initialising forward pass (basic algorithm) until the
    /// clamped evidence has non-zero likelihood, at most `attempts` times.
    pub fn consistent_basic<R: Rng + ?Sized>(&mut self, rng: &mut R, attempts: u32) -> Option<T> {
        (0..attempts).find_map(|_| {
            let z = self.basic(rng);
            (z > T::zero()).then_some(z)
        })
    }

    pub fn assignment(&self) -> Assignment {
        Assignment::complete(self.values.clone())
    }
}

pub fn logic_sampling_step<T: Probability, R: Rng + ?Sized>(
    net: &BeliefNetwork<T>,
    ev: &Evidence,
    rng: &mut R,
) -> SampleScore<T> {
    let mut s = ForwardSampler::new(net, ev);
    let weight = s.logic(rng);
    SampleScore {
        weight,
        assignment: s.assignment(),
    }
}

pub fn basic_step<T: Probability, R: Rng + ?Sized>(
    net: &BeliefNetwork<T>,
    ev: &Evidence,
    rng: &mut R,
) -> SampleScore<T> {
    let mut s = ForwardSampler::new(net, ev);
    let weight = s.basic(rng);
    SampleScore {
        weight,
        assignment: s.assignment(),
    }
}

pub fn importance_step<T: Probability, R: Rng + ?Sized>(
    net: &BeliefNetwork<T>,
    ev: &Evidence,
    dist: &ImportanceDistribution<T>,
    rng: &mut R,
) -> SampleScore<T> {
    let mut s = ForwardSampler::new(net, ev);
    let weight = s.importance(dist, rng);
    SampleScore {
        weight,
        assignment: s.assignment(),
    }
}

/// Unnormalized blanket weights
/// `w(y) = P(y | pa(j)) * prod_{k in children(j)} P(x_k | y, rest)`, written
/// into `out`. Returns their sum.
pub fn blanket_weights<T: Probability>(
    net: &BeliefNetwork<T>,
    values: &[usize],
    node: NodeId,
    out: &mut [T],
) -> T {
    let cpt = net.cpt(node);
    let own = cpt.row(cpt.row_index(values));
    let mut total = T::zero();
    for (y, w) in out.iter_mut().enumerate() {
        let mut p = own[y];
        for &k in net.children(node) {
            if p == T::zero() {
                break;
            }
            let child = net.cpt(k);
            let r = child.row_index_with(values, node, y);
            p = p * child.row(r)[values[k]];
        }
        *w = p;
        total = total + p;
    }
    total
}

/// Blanket weights of `node` normalized to sum to `base`.
///
/// The value `node` currently holds in `x` does not affect the result.
pub fn markov_blanket_score<T: Probability>(
    net: &BeliefNetwork<T>,
    x: &Assignment,
    node: NodeId,
    base: T,
) -> Result<Vec<T>, DegenerateBlanket> {
    let mut w = vec![T::zero(); net.cardinality(node)];
    scaled_blanket(net, x.values(), node, base, &mut w)?;
    Ok(w)
}

/// In-place form of [`markov_blanket_score`].
pub fn scaled_blanket<T: Probability>(
    net: &BeliefNetwork<T>,
    values: &[usize],
    node: NodeId,
    base: T,
    out: &mut [T],
) -> Result<(), DegenerateBlanket> {
    let total = blanket_weights(net, values, node, out);
    if total <= T::zero() {
        return Err(DegenerateBlanket { node });
    }
    let scale = base / total;
    for w in out.iter_mut() {
        *w = *w * scale;
    }
    Ok(())
}
