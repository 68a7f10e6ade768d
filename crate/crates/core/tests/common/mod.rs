#![allow(dead_code)]

use belief_core::exact::joint_probability_of;
use belief_core::rng::{seeded, SimRng};
use belief_core::{Builder, Evidence, Network, Variable};
use rand::Rng;

/// Shape of a generated network.
#[derive(Debug, Clone, Copy)]
pub struct Shape {
    pub nodes: usize,
    pub max_parents: usize,
    pub max_states: usize,
    /// CPT entries are drawn from `[lo, 1]` before normalization.
    pub lo: f64,
}

impl Shape {
    pub fn binary(nodes: usize) -> Self {
        Self {
            nodes,
            max_parents: 3,
            max_states: 2,
            lo: 0.05,
        }
    }
}

pub fn random_network(rng: &mut SimRng, shape: Shape) -> Network {
    let mut b = Builder::new();
    let mut cards = Vec::new();
    for j in 0..shape.nodes {
        let card = rng.random_range(2..=shape.max_states.max(2));
        let states = (0..card).map(|s| format!("s{s}")).collect();
        b.add_variable(Variable::new(format!("X{j}"), states).unwrap()).unwrap();
        cards.push(card);
    }
    for j in 0..shape.nodes {
        let k = rng.random_range(0..=shape.max_parents.min(j));
        let mut parents: Vec<usize> = Vec::new();
        while parents.len() < k {
            let p = rng.random_range(0..j);
            if !parents.contains(&p) {
                parents.push(p);
            }
        }
        let rows: usize = parents.iter().map(|&p| cards[p]).product();
        let table = (0..rows)
            .map(|_| {
                let raw: Vec<f64> = (0..cards[j]).map(|_| rng.random_range(shape.lo..=1.0)).collect();
                let total: f64 = raw.iter().sum();
                raw.into_iter().map(|x| x / total).collect()
            })
            .collect();
        b.set_cpt(j, parents, table).unwrap();
    }
    b.build().unwrap()
}

/// Up to `max_observed` observations whose joint prior probability is at
/// least `min_prob`; empty evidence if no such draw is found.
pub fn random_evidence(net: &Network, rng: &mut SimRng, max_observed: usize, min_prob: f64) -> Evidence {
    for _ in 0..200 {
        let k = rng.random_range(0..=max_observed.min(net.len() - 1));
        let mut obs = Vec::new();
        while obs.len() < k {
            let j = rng.random_range(0..net.len());
            if !obs.iter().any(|&(o, _)| o == j) {
                obs.push((j, rng.random_range(0..net.cardinality(j))));
            }
        }
        let ev = Evidence::new(net, obs).unwrap();
        if evidence_probability(net, &ev) >= min_prob {
            return ev;
        }
    }
    Evidence::empty()
}

/// Brute-force evidence probability by summing the joint.
pub fn evidence_probability(net: &Network, ev: &Evidence) -> f64 {
    let mut total = 0.0;
    for_each_configuration(net, |values| {
        if ev.iter().all(|(j, s)| values[j] == s) {
            total += joint_probability_of(net, values);
        }
    });
    total
}

pub fn for_each_configuration(net: &Network, mut f: impl FnMut(&[usize])) {
    let cards: Vec<usize> = (0..net.len()).map(|j| net.cardinality(j)).collect();
    let mut values = vec![0; net.len()];
    loop {
        f(&values);
        let mut i = 0;
        loop {
            if i == values.len() {
                return;
            }
            values[i] += 1;
            if values[i] < cards[i] {
                break;
            }
            values[i] = 0;
            i += 1;
        }
    }
}

/// Network `index` of a reproducible family.
pub fn case(seed: u64, index: u64, shape: Shape) -> Network {
    random_network(&mut seeded(belief_core::rng::derive_seed(seed, "net", index)), shape)
}
