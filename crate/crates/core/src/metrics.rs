//! Normalized root-mean-square error between estimated and exact marginals.
//!
//! For a binary node with exact marginal `p` and estimate `p^` the term is
//! `(p^ - p)^2 / (p (1 - p))`; both states give the same value, so the
//! per-node term is taken as the mean over states, which also covers
//! multi-state variables. States whose exact probability is 0 or 1 have an
//! undefined term and are skipped; a node with no usable state is dropped
//! from the average. The error is the square root of the mean node term.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::exact::MarginalTable;
use crate::network::{Evidence, NodeId};
use crate::scalar::Probability;
use crate::scores::PosteriorEstimate;

/// Exact probabilities within this distance of 0 or 1 count as degenerate.
pub const DEGENERATE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricError {
    #[error("exact marginals are undefined: the evidence has probability zero")]
    InconsistentEvidence,
    #[error("every node has a degenerate exact marginal; the error is undefined")]
    AllTermsExcluded,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorValue<T> {
    pub value: T,
    /// Nodes that contributed a term.
    pub included: usize,
    /// Unobserved nodes dropped because every exact state was 0 or 1.
    pub excluded: usize,
}

pub fn fertig_mann_error<T: Probability>(
    est: &PosteriorEstimate<T>,
    exact: &MarginalTable<T>,
    ev: &Evidence,
) -> Result<ErrorValue<T>, MetricError> {
    fertig_mann_error_on(est, exact, ev, None)
}

/// [`fertig_mann_error`] restricted to `nodes` (all nodes when `None`).
pub fn fertig_mann_error_on<T: Probability>(
    est: &PosteriorEstimate<T>,
    exact: &MarginalTable<T>,
    ev: &Evidence,
    nodes: Option<&BTreeSet<NodeId>>,
) -> Result<ErrorValue<T>, MetricError> {
    if exact.is_inconsistent() {
        return Err(MetricError::InconsistentEvidence);
    }
    let tol = T::from_f64_lossy(DEGENERATE_TOLERANCE);
    let mut total = T::zero();
    let (mut included, mut excluded) = (0usize, 0usize);
    for (j, exact_row) in exact.iter() {
        if ev.contains(j) || nodes.is_some_and(|s| !s.contains(&j)) {
            continue;
        }
        let Some(est_row) = est.probabilities(j) else {
            continue;
        };
        let terms: Vec<T> = exact_row
            .iter()
            .zip(est_row)
            .filter(|(p, _)| **p > tol && **p < T::one() - tol)
            .map(|(&p, &q)| (q - p) * (q - p) / (p * (T::one() - p)))
            .collect();
        if terms.is_empty() {
            excluded += 1;
            continue;
        }
        let n = T::from_usize(terms.len()).expect("small count");
        total = total + terms.into_iter().sum::<T>() / n;
        included += 1;
    }
    if included == 0 {
        return Err(MetricError::AllTermsExcluded);
    }
    let mean = total / T::from_usize(included).expect("small count");
    Ok(ErrorValue {
        value: mean.sqrt(),
        included,
        excluded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{exact_posteriors, ExactEngine};
    use crate::network::{BeliefNetwork, NetworkBuilder, Variable};
    use crate::scores::ScoreTable;

    fn net(prior: [f64; 2], det_child: bool) -> BeliefNetwork<f64> {
        let mut b = NetworkBuilder::new();
        let x = b.add_variable(Variable::binary("X")).unwrap();
        b.set_cpt(x, vec![], vec![prior.to_vec()]).unwrap();
        if det_child {
            let y = b.add_variable(Variable::binary("Y")).unwrap();
            b.set_cpt(y, vec![], vec![vec![0.0, 1.0]]).unwrap();
        }
        b.build().unwrap()
    }

    fn estimate(net: &BeliefNetwork<f64>, rows: &[[f64; 2]]) -> PosteriorEstimate<f64> {
        let mut t = ScoreTable::new(net, &Evidence::empty());
        for (j, r) in rows.iter().enumerate() {
            t.emit_weights(j, r, 1.0);
        }
        t.normalize()
    }

    #[test]
    fn exact_estimate_has_zero_error() {
        let n = net([0.3, 0.7], false);
        let exact = exact_posteriors(&n, &Evidence::empty(), ExactEngine::Enumeration).unwrap();
        let e = fertig_mann_error(&estimate(&n, &[[0.3, 0.7]]), &exact, &Evidence::empty()).unwrap();
        assert_eq!(e.value, 0.0);
    }

    #[test]
    fn single_term_arithmetic() {
        // p = .5, p^ = .6: sqrt(.01 / .25) = .2
        let n = net([0.5, 0.5], false);
        let exact = exact_posteriors(&n, &Evidence::empty(), ExactEngine::Enumeration).unwrap();
        let e = fertig_mann_error(&estimate(&n, &[[0.4, 0.6]]), &exact, &Evidence::empty()).unwrap();
        assert!((e.value - 0.2).abs() < 1e-12);
    }

    #[test]
    fn degenerate_nodes_are_excluded() {
        let n = net([0.5, 0.5], true);
        let exact = exact_posteriors(&n, &Evidence::empty(), ExactEngine::Enumeration).unwrap();
        let est = estimate(&n, &[[0.4, 0.6], [0.5, 0.5]]);
        let e = fertig_mann_error(&est, &exact, &Evidence::empty()).unwrap();
        assert_eq!((e.included, e.excluded), (1, 1));
        assert!((e.value - 0.2).abs() < 1e-12);

        let only = {
            let mut b = NetworkBuilder::new();
            let y = b.add_variable(Variable::binary("Y")).unwrap();
            b.set_cpt(y, vec![], vec![vec![0.0, 1.0]]).unwrap();
            b.build().unwrap()
        };
        let exact = exact_posteriors(&only, &Evidence::empty(), ExactEngine::Enumeration).unwrap();
        let est = estimate(&only, &[[0.5, 0.5]]);
        assert_eq!(
            fertig_mann_error(&est, &exact, &Evidence::empty()),
            Err(MetricError::AllTermsExcluded)
        );
    }

    #[test]
    fn inconsistent_evidence() {
        let mut b = NetworkBuilder::new();
        let y = b.add_variable(Variable::binary("Y")).unwrap();
        b.set_cpt(y, vec![], vec![vec![0.0, 1.0]]).unwrap();
        let x = b.add_variable(Variable::binary("X")).unwrap();
        b.set_cpt(x, vec![], vec![vec![0.5, 0.5]]).unwrap();
        let n: BeliefNetwork<f64> = b.build().unwrap();
        let ev = Evidence::new(&n, [(0, 0)]).unwrap();
        let exact = exact_posteriors(&n, &ev, ExactEngine::Enumeration).unwrap();
        let est = ScoreTable::new(&n, &ev).normalize();
        assert_eq!(
            fertig_mann_error(&est, &exact, &ev),
            Err(MetricError::InconsistentEvidence)
        );
    }

    #[test]
    fn restricted_to_subset() {
        let n = net([0.5, 0.5], true);
        let exact = exact_posteriors(&n, &Evidence::empty(), ExactEngine::Enumeration).unwrap();
        let est = estimate(&n, &[[0.4, 0.6], [0.5, 0.5]]);
        let only_y = BTreeSet::from([1]);
        assert_eq!(
            fertig_mann_error_on(&est, &exact, &Evidence::empty(), Some(&only_y)),
            Err(MetricError::AllTermsExcluded)
        );
        let only_x = BTreeSet::from([0]);
        let e = fertig_mann_error_on(&est, &exact, &Evidence::empty(), Some(&only_x)).unwrap();
        assert_eq!((e.included, e.excluded), (1, 0));
    }

    #[test]
    fn positive_iff_different() {
        let n = net([0.2, 0.8], false);
        let exact = exact_posteriors(&n, &Evidence::empty(), ExactEngine::Enumeration).unwrap();
        for q in [0.1, 0.19, 0.21, 0.5] {
            let e = fertig_mann_error(&estimate(&n, &[[q, 1.0 - q]]), &exact, &Evidence::empty()).unwrap();
            assert!(e.value > 0.0);
        }
    }
}
