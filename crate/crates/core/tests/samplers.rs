mod common;

use belief_core::bundled;
use belief_core::exact::{exact_posteriors, joint_probability_of, ExactEngine};
use belief_core::forward::ForwardSampler;
use belief_core::importance::{approximate_likelihoods, heuristic_importance_build, ImportanceDistribution};
use belief_core::mcmc::{chavez_run, Scoring};
use belief_core::rng::{derive_seed, seeded};
use belief_core::sampler::{run_sampler, Algorithm, Run, SamplerConfig};
use belief_core::{Builder, Evidence, Network, Variable};
use common::{for_each_configuration, random_evidence, random_network, Shape};
use rand::Rng;

fn coin(p: [f64; 2]) -> Network {
    let mut b = Builder::new();
    let x = b.add_variable(Variable::binary("X")).unwrap();
    b.set_cpt(x, vec![], vec![p.to_vec()]).unwrap();
    b.build().unwrap()
}

#[test]
fn importance_score_by_hand() {
    // P = (.9, .1), P' = (.5, .5): Z = 1.8 or 0.2
    let net = coin([0.9, 0.1]);
    let ev = Evidence::empty();
    let dist = ImportanceDistribution::new(&net, &ev, vec![Some(vec![0.5, 0.5])]).unwrap();
    let mut fwd = ForwardSampler::new(&net, &ev);
    let mut rng = seeded(1);
    let mut seen = [false; 2];
    let mut total = 0.0;
    for _ in 0..20_000 {
        let z = fwd.importance(&dist, &mut rng);
        let s = fwd.values()[0];
        seen[s] = true;
        assert!((z - [1.8, 0.2][s]).abs() < 1e-15);
        total += z;
    }
    assert_eq!(seen, [true, true]);
    // E[Z] = 1
    assert!((total / 20_000.0 - 1.0).abs() < 0.02);
}

#[test]
fn logic_and_basic_coincide_without_evidence() {
    let (net, _) = bundled::cooper_standin::<f64>();
    let ev = Evidence::empty();
    let mut a = ForwardSampler::new(&net, &ev);
    let mut b = ForwardSampler::new(&net, &ev);
    let (mut ra, mut rb) = (seeded(3), seeded(3));
    for _ in 0..1000 {
        assert_eq!(a.logic(&mut ra), 1.0);
        assert_eq!(b.basic(&mut rb), 1.0);
        assert_eq!(a.values(), b.values());
    }
}

#[test]
fn blanket_scoring_reduces_spread() {
    // same sample stream, plain vs blanket scoring, over repeated runs
    let (net, ev) = bundled::cooper_standin::<f64>();
    let exact = exact_posteriors(&net, &ev, ExactEngine::Enumeration).unwrap();
    let runs = 200;
    let mut sq = [[0.0; 3]; 2];
    for r in 0..runs {
        for (k, alg) in [Algorithm::Basic, Algorithm::BasicMb].into_iter().enumerate() {
            let (t, _) = run_sampler(&net, &ev, SamplerConfig::new(alg, 200, r)).unwrap();
            let est = t.normalize::<f64>();
            for (i, (j, m)) in exact.iter().enumerate() {
                sq[k][i] += (est.probabilities(j).unwrap()[1] - m[1]).powi(2) / runs as f64;
            }
        }
    }
    for (i, (mb, plain)) in sq[1].iter().zip(&sq[0]).enumerate() {
        assert!(mb <= plain, "node {i}: {mb} > {plain}");
    }
}

#[test]
fn blanket_and_plain_target_the_same_posterior() {
    let (net, ev) = bundled::deterministic::<f64>();
    let exact = exact_posteriors(&net, &ev, ExactEngine::Enumeration).unwrap();
    for alg in [Algorithm::Basic, Algorithm::BasicMb] {
        let (t, _) = run_sampler(&net, &ev, SamplerConfig::new(alg, 100_000, 12)).unwrap();
        assert!(t.normalize::<f64>().max_abs_error(&exact) < 0.02, "{alg}");
    }
}

#[test]
fn chains_converge_on_positive_networks() {
    let (net, ev) = bundled::cooper_standin::<f64>();
    let exact = exact_posteriors(&net, &ev, ExactEngine::Enumeration).unwrap();
    for alg in [Algorithm::Pearl, Algorithm::PearlMb] {
        let (t, _) = run_sampler(&net, &ev, SamplerConfig::new(alg, 300_000, 2)).unwrap();
        assert!(t.normalize::<f64>().max_abs_error(&exact) < 0.02, "{alg}");
    }
    let mut cfg = SamplerConfig::new(Algorithm::ChavezMb, 200_000, 2);
    cfg.restarts = 2000;
    let (t, _) = run_sampler(&net, &ev, cfg).unwrap();
    assert!(t.normalize::<f64>().max_abs_error(&exact) < 0.03);
}

#[test]
fn restarted_chain_on_one_node_is_binomial() {
    // ten restarts per trial, each scored once: the frequency of state 1
    // over many trials is binomial around the prior
    let net = coin([0.7, 0.3]);
    let mut hits = 0.0;
    let trials = 2000;
    for t in 0..trials {
        let table = chavez_run(&net, &Evidence::empty(), 50, 10, &mut seeded(t), Scoring::Plain).unwrap();
        assert_eq!(table.emissions(0), 10);
        hits += table.score(0, 1);
    }
    let n = (trials * 10) as f64;
    let p = hits / n;
    assert!((p - 0.3).abs() < 4.0 * (0.3 * 0.7 / n).sqrt(), "{p}");
}

#[test]
fn self_importance_moves_towards_posterior() {
    let (net, ev) = bundled::cooper_standin::<f64>();
    let exact = exact_posteriors(&net, &ev, ExactEngine::Enumeration).unwrap();
    let mut run = Run::new(&net, &ev, SamplerConfig::new(Algorithm::SelfImportance, 20_000, 8)).unwrap();
    run.run().unwrap();
    // the root has one row, so its P' is directly comparable to the posterior
    let a = net.node_id("A").unwrap();
    let row = run.importance_distribution().unwrap().row(a, 0);
    let post = exact.marginal(a).unwrap();
    let prior = net.cpt(a).row(0);
    assert!((row[1] - post[1]).abs() < (prior[1] - post[1]).abs());
}

fn with_zeros(rng: &mut impl Rng, net: &Network) -> Network {
    let mut b = Builder::new();
    for v in net.variables() {
        b.add_variable(v.clone()).unwrap();
    }
    for j in 0..net.len() {
        let rows = net
            .cpt(j)
            .rows()
            .map(|r| {
                let mut r = r.to_vec();
                let k = rng.random_range(0..r.len());
                if rng.random_bool(0.4) {
                    r[k] = 0.0;
                }
                let total: f64 = r.iter().sum();
                r.iter().map(|x| x / total).collect()
            })
            .collect();
        b.set_cpt(j, net.parents(j).to_vec(), rows).unwrap();
    }
    b.build().unwrap()
}

#[test]
fn heuristic_likelihood_zeros_are_exact_zeros() {
    let mut checked = 0;
    for i in 0..300 {
        let mut rng = seeded(derive_seed(77, "lambda", i));
        let nodes = rng.random_range(2..=6);
        let base = random_network(&mut rng, Shape::binary(nodes));
        let net = with_zeros(&mut rng, &base);
        let ev = random_evidence(&net, &mut rng, 2, 1e-9);
        if ev.is_empty() {
            continue;
        }
        let lambda = approximate_likelihoods(&net, &ev);
        // joint mass of (X_j = s, evidence)
        let mut mass: Vec<Vec<f64>> = (0..net.len()).map(|j| vec![0.0; net.cardinality(j)]).collect();
        for_each_configuration(&net, |v| {
            if ev.iter().all(|(j, s)| v[j] == s) {
                let p = joint_probability_of(&net, v);
                for (j, m) in mass.iter_mut().enumerate() {
                    m[v[j]] += p;
                }
            }
        });
        for j in (0..net.len()).filter(|&j| !ev.contains(j)) {
            if let Some(l) = &lambda[j] {
                for (s, &ls) in l.iter().enumerate() {
                    if ls == 0.0 {
                        assert_eq!(mass[j][s], 0.0, "case {i} node {j} state {s}");
                        checked += 1;
                    }
                }
            }
        }
        // every configuration the posterior reaches keeps positive proposal mass
        let dist = heuristic_importance_build(&net, &ev);
        for_each_configuration(&net, |v| {
            if ev.iter().any(|(j, s)| v[j] != s) || joint_probability_of(&net, v) == 0.0 {
                return;
            }
            for j in (0..net.len()).filter(|&j| !ev.contains(j)) {
                let row = dist.row(j, net.cpt(j).row_index(v));
                assert!(row[v[j]] > 0.0, "case {i} node {j}");
            }
        });
    }
    assert!(checked > 0, "no zero likelihoods exercised");
}
