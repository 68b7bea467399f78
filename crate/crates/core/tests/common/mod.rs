//! Independent oracles shared by the property and acceptance tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wdro_core::Dataset;

/// Worst-case probability as the linear program
/// `max sum v  s.t.  0 <= v <= p,  sum d v <= eps`, solved by enumerating
/// the vertices of the feasible polytope: every vertex has all coordinates
/// at a bound except at most one, which is fixed by the budget.
pub fn lp_worst_case(d: &[f64], p: &[f64], eps: f64) -> f64 {
    let n = d.len();
    assert!(n <= 16);
    let mut best: f64 = 0.0;
    for mask in 0u32..(1 << n) {
        let full = |i: usize| mask & (1 << i) != 0;
        let (mut cost, mut mass) = (0.0, 0.0);
        for i in (0..n).filter(|&i| full(i)) {
            cost += d[i] * p[i];
            mass += p[i];
        }
        if cost > eps * (1.0 + 1e-14) + 1e-300 {
            continue;
        }
        best = best.max(mass);
        for j in (0..n).filter(|&j| !full(j) && d[j] > 0.0 && d[j].is_finite()) {
            let v = (eps - cost) / d[j];
            if v >= 0.0 && v <= p[j] {
                best = best.max(mass + v);
            }
        }
    }
    best.min(1.0)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Positive weights summing to one.
pub fn random_weights(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / total).collect()
}

/// Distances with roughly a quarter exact zeros.
pub fn random_distances(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n)
        .map(|_| {
            if rng.random_bool(0.25) {
                0.0
            } else {
                rng.random_range(0.01..3.0)
            }
        })
        .collect()
}

/// Points uniform in `[-3, 3]^d`, random labels and weights.
pub fn random_dataset(rng: &mut impl Rng, n: usize, d: usize) -> Dataset {
    let points = (0..n * d).map(|_| rng.random_range(-3.0..3.0)).collect();
    let labels = (0..n).map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 }).collect();
    let weights = random_weights(rng, n);
    Dataset::new(d, points, labels, weights).unwrap()
}

/// `max_k |a_k - b_k| / max(||a||_inf, ||b||_inf)`.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let scale = a.iter().chain(b).fold(0.0f64, |m, v| m.max(v.abs()));
    let diff = a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

/// Central differences with step `1e-6 * max(1, |x_k|)`.
pub fn fd_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64]) -> Vec<f64> {
    (0..x.len())
        .map(|k| {
            let h = 1e-6 * x[k].abs().max(1.0);
            let (mut xp, mut xm) = (x.to_vec(), x.to_vec());
            xp[k] += h;
            xm[k] -= h;
            (f(&xp) - f(&xm)) / (2.0 * h)
        })
        .collect()
}
