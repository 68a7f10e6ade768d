//! Replacement selection distributions `P'` for the importance algorithm.
//!
//! `P'` has one table per unobserved node with the same layout as the node's
//! CPT. User-supplied tables must put positive mass wherever the CPT does, so
//! that every state the model can produce can also be selected.

use std::collections::HashMap;

use log::warn;
use thiserror::Error;

use crate::forward::SampleScore;
use crate::network::{BeliefNetwork, Evidence, NodeId};
use crate::scalar::Probability;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ImportanceError {
    #[error("importance tables cover {found} nodes; the network has {expected}")]
    NodeCount { found: usize, expected: usize },
    #[error("node `{node}`: an importance table is required for every unobserved node")]
    MissingTable { node: String },
    #[error("node `{node}`: table has {found} entries; expected {expected}")]
    Shape {
        node: String,
        found: usize,
        expected: usize,
    },
    #[error("node `{node}`, row {row}: entry {value} is not a probability")]
    Range { node: String, row: usize, value: f64 },
    #[error("node `{node}`, row {row}: entries sum to {sum}, not 1")]
    RowSum { node: String, row: usize, sum: f64 },
    #[error("node `{node}`, row {row}: state {state} has P > 0 but P' = 0")]
    Support {
        node: String,
        row: usize,
        state: usize,
    },
}

/// Per-node replacement CPTs; observed nodes have none.
///
/// Each row also carries the total weight behind it (1 for a supplied row),
/// so that self-importance updates add scores to the accumulated weights
/// rather than to a row already scaled down to sum 1.
#[derive(Debug, Clone, PartialEq)]
pub struct ImportanceDistribution<T> {
    tables: Vec<Option<Vec<T>>>,
    cards: Vec<usize>,
    mass: Vec<Vec<T>>,
}

fn unit_mass<T: Probability>(net: &BeliefNetwork<T>) -> Vec<Vec<T>> {
    (0..net.len())
        .map(|j| vec![T::one(); net.cpt(j).row_count()])
        .collect()
}

impl<T: Probability> ImportanceDistribution<T> {
    /// `P' = P` on every unobserved node.
    pub fn prior(net: &BeliefNetwork<T>, ev: &Evidence) -> Self {
        let tables = (0..net.len())
            .map(|j| (!ev.contains(j)).then(|| net.cpt(j).table().to_vec()))
            .collect();
        Self {
            tables,
            cards: (0..net.len()).map(|j| net.cardinality(j)).collect(),
            mass: unit_mass(net),
        }
    }

    /// Validated user-supplied tables (flat, CPT layout). Entries for
    /// observed nodes are ignored and may be `None`.
    pub fn new(
        net: &BeliefNetwork<T>,
        ev: &Evidence,
        tables: Vec<Option<Vec<T>>>,
    ) -> Result<Self, ImportanceError> {
        if tables.len() != net.len() {
            return Err(ImportanceError::NodeCount {
                found: tables.len(),
                expected: net.len(),
            });
        }
        let tables: Vec<Option<Vec<T>>> = tables
            .into_iter()
            .enumerate()
            .map(|(j, t)| if ev.contains(j) { None } else { t })
            .collect();
        let dist = Self {
            tables,
            cards: (0..net.len()).map(|j| net.cardinality(j)).collect(),
            mass: unit_mass(net),
        };
        dist.validate(net, ev)?;
        Ok(dist)
    }

    /// Checks shape, row sums and the support condition against `net`.
    pub fn validate(&self, net: &BeliefNetwork<T>, ev: &Evidence) -> Result<(), ImportanceError> {
        let tol = T::row_tolerance();
        for j in 0..net.len() {
            if ev.contains(j) {
                continue;
            }
            let name = || net.variable(j).name().to_owned();
            let table = self.tables[j]
                .as_ref()
                .ok_or_else(|| ImportanceError::MissingTable { node: name() })?;
            let cpt = net.cpt(j);
            if table.len() != cpt.table().len() {
                return Err(ImportanceError::Shape {
                    node: name(),
                    found: table.len(),
                    expected: cpt.table().len(),
                });
            }
            let card = cpt.cardinality();
            for (r, (row, prior)) in table.chunks(card).zip(cpt.rows()).enumerate() {
                if let Some(bad) = row
                    .iter()
                    .find(|p| !(p.is_finite() && **p >= T::zero() && **p <= T::one()))
                {
                    return Err(ImportanceError::Range {
                        node: name(),
                        row: r,
                        value: bad.to_f64_lossless(),
                    });
                }
                let sum: T = row.iter().copied().sum();
                if (sum - T::one()).abs() > tol {
                    return Err(ImportanceError::RowSum {
                        node: name(),
                        row: r,
                        sum: sum.to_f64_lossless(),
                    });
                }
                if let Some(state) =
                    (0..card).find(|&s| prior[s] > T::zero() && row[s] <= T::zero())
                {
                    return Err(ImportanceError::Support {
                        node: name(),
                        row: r,
                        state,
                    });
                }
            }
        }
        Ok(())
    }

    /// Selection row of `node` for CPT row index `row`.
    #[inline]
    pub fn row(&self, node: NodeId, row: usize) -> &[T] {
        let card = self.cards[node];
        let table = self.tables[node].as_ref().expect("unobserved node");
        &table[row * card..(row + 1) * card]
    }

    pub fn table(&self, node: NodeId) -> Option<&[T]> {
        self.tables[node].as_deref()
    }

    /// Applies one self-importance update from `batch`: each sample adds its
    /// score to the cell `(x_j, parents)` it realized, then touched rows are
    /// renormalized.
    pub fn self_importance_update(&mut self, net: &BeliefNetwork<T>, batch: &[SampleScore<T>]) {
        let mut acc = SelfImportanceAccumulator::default();
        for s in batch {
            acc.add(net, self, s.assignment.values(), s.weight);
        }
        acc.apply(net, self);
    }
}

/// Pending self-importance increments keyed by `(node, row)`.
#[derive(Debug, Clone, Default)]
pub struct SelfImportanceAccumulator<T> {
    pending: HashMap<(NodeId, usize), Vec<T>>,
}

impl<T: Probability> SelfImportanceAccumulator<T> {
    pub fn add(
        &mut self,
        net: &BeliefNetwork<T>,
        dist: &ImportanceDistribution<T>,
        values: &[usize],
        z: T,
    ) {
        if z <= T::zero() {
            return;
        }
        for j in 0..net.len() {
            if dist.tables[j].is_none() {
                continue;
            }
            let cpt = net.cpt(j);
            let r = cpt.row_index(values);
            let cell = self
                .pending
                .entry((j, r))
                .or_insert_with(|| vec![T::zero(); cpt.cardinality()]);
            cell[values[j]] = cell[values[j]] + z;
        }
    }

    pub fn is_empty(&self) -> bool {
        self.pending.is_empty()
    }

    /// `P'_new(row) ∝ P'_old(row) + accumulated scores` for touched rows,
    /// where `P'_old` keeps the weight it has accumulated so far: a row that
    /// started at `P` and has received scores `S` becomes `(P + S) / (1 + |S|)`.
    /// Weights only grow, so no cell that `P` supports can reach zero.
    pub fn apply(&mut self, net: &BeliefNetwork<T>, dist: &mut ImportanceDistribution<T>) {
        for ((j, r), add) in self.pending.drain() {
            let card = dist.cards[j];
            let prior = net.cpt(j).row(r);
            let mass = &mut dist.mass[j][r];
            let table = dist.tables[j].as_mut().expect("unobserved node");
            let row = &mut table[r * card..(r + 1) * card];
            let updated: Vec<T> = row
                .iter()
                .zip(&add)
                .zip(prior)
                .map(|((&old, &z), &p)| if p > T::zero() { old * *mass + z } else { T::zero() })
                .collect();
            let total: T = updated.iter().copied().sum();
            if total > T::zero() && total.is_finite() {
                for (cell, u) in row.iter_mut().zip(updated) {
                    *cell = u / total;
                }
                *mass = total;
            }
        }
    }
}

/// Prior marginals from one forward pass that treats parents as independent.
pub fn approximate_prior_marginals<T: Probability>(net: &BeliefNetwork<T>) -> Vec<Vec<T>> {
    let mut pi: Vec<Vec<T>> = (0..net.len())
        .map(|j| vec![T::zero(); net.cardinality(j)])
        .collect();
    for &j in net.topological_order() {
        let cpt = net.cpt(j);
        let mut out = vec![T::zero(); cpt.cardinality()];
        for r in 0..cpt.row_count() {
            let weight = cpt
                .parents()
                .iter()
                .zip(cpt.parent_values(r))
                .fold(T::one(), |acc, (&p, v)| acc * pi[p][v]);
            if weight == T::zero() {
                continue;
            }
            for (o, &p) in out.iter_mut().zip(cpt.row(r)) {
                *o = *o + weight * p;
            }
        }
        pi[j] = out;
    }
    pi
}

/// One backward pass of likelihood messages from the evidence towards the
/// roots, treating the graph as singly connected. Co-parents enter each
/// message through their approximate prior marginals. Nodes without
/// observed descendants get `None` (likelihood identically one).
pub fn approximate_likelihoods<T: Probability>(
    net: &BeliefNetwork<T>,
    ev: &Evidence,
) -> Vec<Option<Vec<T>>> {
    let n = net.len();
    let pi = approximate_prior_marginals(net);
    let mut lambda: Vec<Option<Vec<T>>> = vec![None; n];
    for &j in net.topological_order().iter().rev() {
        let card = net.cardinality(j);
        let mut l: Option<Vec<T>> = ev.get(j).map(|obs| {
            let mut v = vec![T::zero(); card];
            v[obs] = T::one();
            v
        });
        for &k in net.children(j) {
            let Some(child_lambda) = lambda[k].as_ref() else {
                continue;
            };
            let cpt = net.cpt(k);
            let pos = cpt.parents().iter().position(|&p| p == j).expect("parent");
            let mut msg = vec![T::zero(); card];
            for r in 0..cpt.row_count() {
                let pv = cpt.parent_values(r);
                let weight = cpt
                    .parents()
                    .iter()
                    .zip(&pv)
                    .enumerate()
                    .filter(|(i, _)| *i != pos)
                    .fold(T::one(), |acc, (_, (&p, &v))| acc * pi[p][v]);
                if weight == T::zero() {
                    continue;
                }
                let like: T = cpt
                    .row(r)
                    .iter()
                    .zip(child_lambda)
                    .map(|(&p, &lk)| p * lk)
                    .sum();
                msg[pv[pos]] = msg[pv[pos]] + weight * like;
            }
            let acc = l.get_or_insert_with(|| vec![T::one(); card]);
            for (a, m) in acc.iter_mut().zip(msg) {
                *a = *a * m;
            }
        }
        if let Some(v) = l.as_mut() {
            let max = v.iter().copied().fold(T::zero(), T::max);
            if max > T::zero() {
                for x in v.iter_mut() {
                    *x = *x / max;
                }
            }
        }
        lambda[j] = l;
    }
    lambda
}

/// `P'(x_j | pa) ∝ lambda(x_j) P(x_j | pa)` from [`approximate_likelihoods`].
///
/// A likelihood of zero is only produced for states that no configuration
/// consistent with the evidence can take, so the result may zero such
/// states; it never zeroes a state the posterior can reach. Rows whose every
/// state is ruled out fall back to the CPT row.
pub fn heuristic_importance_build<T: Probability>(
    net: &BeliefNetwork<T>,
    ev: &Evidence,
) -> ImportanceDistribution<T> {
    let lambda = approximate_likelihoods(net, ev);
    let mut dist = ImportanceDistribution::prior(net, ev);
    for (j, l) in lambda.iter().enumerate() {
        let (Some(table), Some(l)) = (dist.tables[j].as_mut(), l.as_ref()) else {
            continue;
        };
        let card = net.cardinality(j);
        for (r, row) in table.chunks_mut(card).enumerate() {
            let weighted: Vec<T> = row.iter().zip(l).map(|(&p, &lk)| p * lk).collect();
            let total: T = weighted.iter().copied().sum();
            if total > T::zero() {
                for (cell, w) in row.iter_mut().zip(weighted) {
                    *cell = w / total;
                }
            } else {
                warn!(
                    "heuristic importance: row {r} of `{}` is ruled out by the evidence; using the CPT row",
                    net.variable(j).name()
                );
            }
        }
    }
    dist
}
