//! Exact posterior marginals for desk-sized networks.
//!
//! Two independent back-ends: brute-force enumeration of the joint (the
//! reference) and variable elimination with a min-degree ordering. They are
//! cross-checked against each other in the tests.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::network::{Assignment, BeliefNetwork, Evidence, NodeId};
use crate::scalar::Probability;

/// Default limit on the number of configurations enumeration will visit.
pub const DEFAULT_ENUMERATION_CAP: u128 = 1 << 24;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExactError {
    #[error("enumeration would visit {size} configurations; the cap is {cap}")]
    StateSpaceExceeded { size: u128, cap: u128 },
    #[error("assignment leaves node {0} unset")]
    IncompleteAssignment(NodeId),
    #[error("assignment has {found} entries; the network has {expected} nodes")]
    LengthMismatch { found: usize, expected: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExactEngine {
    #[default]
    Enumeration,
    VariableElimination,
}

/// Posterior marginals of every unobserved node plus `P(x*_E)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalTable<T> {
    marginals: Vec<Option<Vec<T>>>,
    evidence_probability: T,
}

impl<T: Probability> MarginalTable<T> {
    /// Builds a table from unnormalized per-node sums and the evidence mass.
    fn from_unnormalized(mut sums: Vec<Option<Vec<T>>>, evidence_probability: T) -> Self {
        if evidence_probability > T::zero() {
            for v in sums.iter_mut().flatten() {
                let total: T = v.iter().copied().sum();
                for p in v.iter_mut() {
                    *p = *p / total;
                }
            }
        }
        Self {
            marginals: sums,
            evidence_probability,
        }
    }

    /// Marginal of `node`; `None` for observed nodes.
    pub fn marginal(&self, node: NodeId) -> Option<&[T]> {
        self.marginals[node].as_deref()
    }

    pub fn evidence_probability(&self) -> T {
        self.evidence_probability
    }

    /// `P(x*_E) = 0`: no posterior exists and the marginals are all zero.
    pub fn is_inconsistent(&self) -> bool {
        self.evidence_probability <= T::zero()
    }

    pub fn len(&self) -> usize {
        self.marginals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.marginals.is_empty()
    }

    /// `(node, marginal)` for every unobserved node.
    pub fn iter(&self) -> impl Iterator<Item = (NodeId, &[T])> + '_ {
        self.marginals
            .iter()
            .enumerate()
            .filter_map(|(j, m)| m.as_deref().map(|m| (j, m)))
    }

    /// Largest absolute difference between matching entries.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.iter()
            .zip(other.iter())
            .flat_map(|((_, a), (_, b))| a.iter().zip(b).map(|(x, y)| (*x - *y).abs()))
            .fold(T::zero(), T::max)
    }
}

/// `P(x) = prod_k P(x_k | x_parents(k))` for a complete assignment.
pub fn joint_probability<T: Probability>(
    net: &BeliefNetwork<T>,
    x: &Assignment,
) -> Result<T, ExactError> {
    if x.len() != net.len() {
        return Err(ExactError::LengthMismatch {
            found: x.len(),
            expected: net.len(),
        });
    }
    if let Some(j) = (0..x.len()).find(|&j| x.get(j).is_none()) {
        return Err(ExactError::IncompleteAssignment(j));
    }
    Ok(joint_probability_of(net, x.values()))
}

/// Unchecked variant of [`joint_probability`] over a raw state vector.
pub fn joint_probability_of<T: Probability>(net: &BeliefNetwork<T>, values: &[usize]) -> T {
    let mut p = T::one();
    for (j, &s) in values.iter().enumerate() {
        p = p * net.cpt(j).prob(s, values);
        if p == T::zero() {
            break;
        }
    }
    p
}

pub fn exact_posteriors<T: Probability>(
    net: &BeliefNetwork<T>,
    ev: &Evidence,
    engine: ExactEngine,
) -> Result<MarginalTable<T>, ExactError> {
    match engine {
        ExactEngine::Enumeration => enumerate_posteriors(net, ev, DEFAULT_ENUMERATION_CAP),
        ExactEngine::VariableElimination => Ok(eliminate_posteriors(net, ev)),
    }
}

/// Sums the joint over every configuration of the unobserved nodes.
pub fn enumerate_posteriors<T: Probability>(
    net: &BeliefNetwork<T>,
    ev: &Evidence,
    cap: u128,
) -> Result<MarginalTable<T>, ExactError> {
    let n = net.len();
    let dense = ev.dense(n);
    let free: Vec<NodeId> = (0..n).filter(|&j| dense[j].is_none()).collect();
    let size = free
        .iter()
        .fold(1u128, |acc, &j| acc.saturating_mul(net.cardinality(j) as u128));
    if size > cap {
        return Err(ExactError::StateSpaceExceeded { size, cap });
    }

    let mut values: Vec<usize> = dense.iter().map(|s| s.unwrap_or(0)).collect();
    let mut sums: Vec<Option<Vec<T>>> = (0..n)
        .map(|j| dense[j].is_none().then(|| vec![T::zero(); net.cardinality(j)]))
        .collect();
    let mut total = T::zero();
    'outer: loop {
        let p = joint_probability_of(net, &values);
        if p > T::zero() {
            total = total + p;
            for &j in &free {
                let cell = &mut sums[j].as_mut().expect("free node")[values[j]];
                *cell = *cell + p;
            }
        }
        for &j in free.iter().rev() {
            values[j] += 1;
            if values[j] < net.cardinality(j) {
                continue 'outer;
            }
            values[j] = 0;
        }
        break;
    }
    Ok(MarginalTable::from_unnormalized(sums, total))
}

/// Table over a sorted variable scope, last variable varying fastest.
#[derive(Debug, Clone)]
struct Factor<T> {
    vars: Vec<NodeId>,
    cards: Vec<usize>,
    values: Vec<T>,
}

impl<T: Probability> Factor<T> {
    fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.vars.len()];
        for i in (0..self.vars.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * self.cards[i + 1];
        }
        strides
    }

    /// CPT of `node` with observed variables fixed and dropped from scope.
    fn from_cpt(net: &BeliefNetwork<T>, node: NodeId, dense: &[Option<usize>]) -> Self {
        let cpt = net.cpt(node);
        let scope: BTreeSet<NodeId> = cpt.parents().iter().copied().chain([node]).collect();
        let vars: Vec<NodeId> = scope.into_iter().filter(|&v| dense[v].is_none()).collect();
        let cards: Vec<usize> = vars.iter().map(|&v| net.cardinality(v)).collect();
        let size: usize = cards.iter().product();
        let mut full: Vec<usize> = dense.iter().map(|s| s.unwrap_or(0)).collect();
        let mut values = Vec::with_capacity(size);
        let mut local = vec![0usize; vars.len()];
        for _ in 0..size {
            for (&v, &s) in vars.iter().zip(&local) {
                full[v] = s;
            }
            values.push(cpt.prob(full[node], &full));
            for i in (0..local.len()).rev() {
                local[i] += 1;
                if local[i] < cards[i] {
                    break;
                }
                local[i] = 0;
            }
        }
        Self { vars, cards, values }
    }

    fn product(&self, other: &Self) -> Self {
        let mut vars: Vec<NodeId> = self.vars.iter().chain(&other.vars).copied().collect();
        vars.sort_unstable();
        vars.dedup();
        let cards: Vec<usize> = vars
            .iter()
            .map(|v| {
                self.vars
                    .iter()
                    .position(|x| x == v)
                    .map(|i| self.cards[i])
                    .unwrap_or_else(|| other.cards[other.vars.iter().position(|x| x == v).unwrap()])
            })
            .collect();
        let project = |f: &Self| -> Vec<usize> {
            let strides = f.strides();
            vars.iter()
                .map(|v| f.vars.iter().position(|x| x == v).map_or(0, |i| strides[i]))
                .collect()
        };
        let (sa, sb) = (project(self), project(other));
        let size: usize = cards.iter().product();
        let mut values = Vec::with_capacity(size);
        let mut local = vec![0usize; vars.len()];
        let (mut ia, mut ib) = (0usize, 0usize);
        for _ in 0..size {
            values.push(self.values[ia] * other.values[ib]);
            for i in (0..local.len()).rev() {
                local[i] += 1;
                ia += sa[i];
                ib += sb[i];
                if local[i] < cards[i] {
                    break;
                }
                ia -= sa[i] * cards[i];
                ib -= sb[i] * cards[i];
                local[i] = 0;
            }
        }
        Self { vars, cards, values }
    }

    fn sum_out(&self, var: NodeId) -> Self {
        let pos = self.vars.iter().position(|&v| v == var).expect("var in scope");
        let strides = self.strides();
        let card = self.cards[pos];
        let stride = strides[pos];
        let mut vars = self.vars.clone();
        let mut cards = self.cards.clone();
        vars.remove(pos);
        cards.remove(pos);
        let outer = self.values.len() / (card * stride);
        let mut values = Vec::with_capacity(outer * stride);
        for o in 0..outer {
            for i in 0..stride {
                let base = o * card * stride + i;
                let s: T = (0..card).map(|k| self.values[base + k * stride]).sum();
                values.push(s);
            }
        }
        Self { vars, cards, values }
    }

    fn total(&self) -> T {
        self.values.iter().copied().sum()
    }
}

/// Eliminates `order` from `factors`, multiplying what remains.
fn eliminate<T: Probability>(mut factors: Vec<Factor<T>>, order: &[NodeId]) -> Factor<T> {
    for &var in order {
        let (touching, rest): (Vec<_>, Vec<_>) =
            factors.into_iter().partition(|f| f.vars.contains(&var));
        factors = rest;
        if let Some(prod) = touching.into_iter().reduce(|a, b| a.product(&b)) {
            factors.push(prod.sum_out(var));
        }
    }
    factors
        .into_iter()
        .reduce(|a, b| a.product(&b))
        .unwrap_or(Factor {
            vars: vec![],
            cards: vec![],
            values: vec![T::one()],
        })
}

/// Greedy min-degree ordering over the interaction graph of `factors`;
/// ties go to the smaller node id.
fn min_degree_order<T>(factors: &[Factor<T>], mut remaining: BTreeSet<NodeId>) -> Vec<NodeId> {
    let mut scopes: Vec<BTreeSet<NodeId>> =
        factors.iter().map(|f| f.vars.iter().copied().collect()).collect();
    let mut order = Vec::with_capacity(remaining.len());
    while !remaining.is_empty() {
        let neighbours = |v: NodeId, scopes: &[BTreeSet<NodeId>]| -> BTreeSet<NodeId> {
            scopes
                .iter()
                .filter(|s| s.contains(&v))
                .flat_map(|s| s.iter().copied())
                .filter(|&u| u != v)
                .collect()
        };
        let best = *remaining
            .iter()
            .min_by_key(|&&v| (neighbours(v, &scopes).len(), v))
            .expect("non-empty");
        let merged = neighbours(best, &scopes);
        scopes.retain(|s| !s.contains(&best));
        scopes.push(merged);
        remaining.remove(&best);
        order.push(best);
    }
    order
}

/// Variable elimination, run once per unobserved node.
pub fn eliminate_posteriors<T: Probability>(net: &BeliefNetwork<T>, ev: &Evidence) -> MarginalTable<T> {
    let n = net.len();
    let dense = ev.dense(n);
    let factors: Vec<Factor<T>> = (0..n).map(|j| Factor::from_cpt(net, j, &dense)).collect();
    let free: BTreeSet<NodeId> = (0..n).filter(|&j| dense[j].is_none()).collect();

    let all = min_degree_order(&factors, free.clone());
    let evidence_probability = eliminate(factors.clone(), &all).total();

    let sums = (0..n)
        .map(|q| {
            if dense[q].is_some() {
                return None;
            }
            let mut others = free.clone();
            others.remove(&q);
            let order = min_degree_order(&factors, others);
            let f = eliminate(factors.clone(), &order);
            debug_assert_eq!(f.vars, vec![q]);
            Some(f.values)
        })
        .collect();
    MarginalTable::from_unnormalized(sums, evidence_probability)
}
