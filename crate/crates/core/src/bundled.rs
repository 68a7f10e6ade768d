//! Example networks shipped with the crate.

use crate::format::{load_evidence, load_network};
use crate::network::{BeliefNetwork, Evidence};
use crate::scalar::Probability;

pub const DETERMINISTIC: &str = include_str!("../networks/deterministic.net");
pub const DETERMINISTIC_EVIDENCE: &str = include_str!("../networks/deterministic-evidence.json");
pub const COOPER_STANDIN: &str = include_str!("../networks/cooper-standin.net");
pub const COOPER_STANDIN_EVIDENCE: &str = include_str!("../networks/cooper-standin-evidence.json");

/// Network with deterministic OR/AND nodes and its `E = true` finding.
pub fn deterministic<T: Probability>() -> (BeliefNetwork<T>, Evidence) {
    let net = load_network(DETERMINISTIC).expect("bundled network is valid");
    let ev = load_evidence(&net, DETERMINISTIC_EVIDENCE).expect("bundled evidence is valid");
    (net, ev)
}

/// Five-node diagnosis network and its unlikely two-node finding.
pub fn cooper_standin<T: Probability>() -> (BeliefNetwork<T>, Evidence) {
    let net = load_network(COOPER_STANDIN).expect("bundled network is valid");
    let ev = load_evidence(&net, COOPER_STANDIN_EVIDENCE).expect("bundled evidence is valid");
    (net, ev)
}
