#![allow(dead_code)]

use std::sync::Arc;

use geolocal::hamiltonian::{worst_case_coeffs, CoeffVector, WorstCaseSpec};
use geolocal::lattice::{BitString, Lattice, TermTable};
use geolocal::pipeline::{OracleConfig, OracleSummary, SimulatedOracle};

pub fn table(spec: &str) -> Arc<TermTable> {
    Arc::new(TermTable::build(Lattice::parse(spec).unwrap()))
}

/// `J = h = 1`, `S = {0}` on the given lattice.
pub fn worst_instance(spec: &str) -> CoeffVector {
    let t = table(spec);
    let mut subset = vec![false; t.num_qubits()];
    subset[0] = true;
    let ws = WorstCaseSpec::uniform(&t, BitString::from_bits(subset), 1.0);
    worst_case_coeffs(&ws, t).unwrap()
}

pub fn unit_worst_instance(spec: &str) -> CoeffVector {
    let g = worst_instance(spec);
    let n = g.norm2();
    g.scaled(1.0 / n)
}

pub fn oracle(config: OracleConfig) -> (SimulatedOracle, OracleSummary) {
    let summary = OracleSummary {
        epsilon_a: config.epsilon_a,
        delta_corrupt: config.delta_corrupt,
        model: config.model.describe(),
    };
    (SimulatedOracle::new(config).unwrap(), summary)
}

/// `n` nodes in `[-1, 1]`, consecutive gaps at least `delta`, in random order of gap sizes.
pub fn separated_nodes<R: rand::Rng>(n: usize, delta: f64, rng: &mut R) -> Vec<f64> {
    let slack = 2.0 - (n - 1) as f64 * delta;
    assert!(slack >= 0.0, "{n} nodes do not fit at separation {delta}");
    let mut u: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * slack).collect();
    u.sort_by(f64::total_cmp);
    u.iter().enumerate().map(|(i, s)| -1.0 + s + i as f64 * delta).collect()
}

pub struct RebwInstance {
    /// Monomial coefficients of the hidden polynomial.
    pub truth: Vec<f64>,
    pub points: Vec<(f64, f64)>,
    pub corrupted: Vec<usize>,
}

pub fn eval_monomial(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, a| acc * x + a)
}

/// Degree-`d` polynomial with coefficients in `[-1, 1]`, values perturbed by
/// at most `eps`, and `k` nodes moved by `0.5..5` in a random direction.
pub fn rebw_instance<R: rand::Rng>(n: usize, delta: f64, d: usize, k: usize, eps: f64, rng: &mut R) -> RebwInstance {
    let xs = separated_nodes(n, delta, rng);
    let truth: Vec<f64> = (0..=d).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut corrupted = rand::seq::index::sample(rng, n, k).into_vec();
    corrupted.sort_unstable();
    let points = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let mut y = eval_monomial(&truth, x);
            if eps > 0.0 {
                y += rng.random_range(-eps..=eps);
            }
            if corrupted.contains(&i) {
                let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                y += sign * rng.random_range(0.5..5.0);
            }
            (x, y)
        })
        .collect();
    RebwInstance { truth, points, corrupted }
}
