//! Worst-case misclassification probability over a Wasserstein ball around a
//! finite-support distribution, and the CVaR of the distance to
//! misclassification.
//!
//! Both quantities reduce to one-dimensional piecewise-linear problems in a
//! multiplier `t`, which are solved exactly by enumerating breakpoints:
//!
//! ```text
//! worst-case(eps) = inf_{t>0}  eps*t + sum_i p_i max{0, 1 - t d_i}
//! rho * CVaR_rho  = sup_{t>0}  rho*t + sum_i p_i min{0, d_i - t}
//! ```
//!
//! The worst case also equals a fractional knapsack value, which is computed
//! greedily as an independent route.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::geometry::{distance, is_misclassified, Hyperplane};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorstCaseResult {
    pub value: f64,
    /// Minimizing multiplier. `0` stands for the limit `t -> 0+` and `+inf`
    /// for `t -> inf` (the `eps = 0` case).
    #[serde(with = "crate::serde_real")]
    pub t_star: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CvarResult {
    /// `CVaR_rho` of the distance.
    #[serde(with = "crate::serde_real")]
    pub value: f64,
    /// `rho * CVaR_rho`, computed without dividing by `rho`.
    #[serde(with = "crate::serde_real")]
    pub scaled: f64,
    /// Left-most maximizing breakpoint; `0` for the limit `t -> 0+`, `+inf`
    /// when the supremum is unbounded.
    #[serde(with = "crate::serde_real")]
    pub t_star: f64,
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon >= 0.0 && epsilon.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(
            "epsilon",
            format!("must be finite and nonnegative, got {epsilon}"),
        ))
    }
}

fn check_rho(rho: f64) -> Result<()> {
    if rho > 0.0 && rho < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid("rho", format!("{rho} is outside (0, 1)")))
    }
}

fn check_instance(distances: &[f64], weights: &[f64]) -> Result<()> {
    if distances.len() != weights.len() || distances.is_empty() {
        return Err(Error::invalid("distances", "must be non-empty and match the weights"));
    }
    if distances.iter().any(|d| !(*d >= 0.0)) {
        return Err(Error::invalid("distances", "must be nonnegative"));
    }
    Ok(())
}

/// Distances of `ds` under `h`, with boundary points snapped to exactly zero.
pub fn snapped_distances(h: &Hyperplane, ds: &Dataset) -> Vec<f64> {
    ds.iter()
        .map(|(x, y, _)| {
            let d = distance(h, x, y);
            if is_misclassified(d, x) {
                0.0
            } else {
                d
            }
        })
        .collect()
}

/// Finite positive distances with their weights, ascending.
fn sorted_positive(distances: &[f64], weights: &[f64]) -> Vec<(f64, f64)> {
    let mut pairs: Vec<(f64, f64)> = distances
        .iter()
        .zip(weights)
        .filter(|(d, _)| **d > 0.0 && d.is_finite())
        .map(|(&d, &p)| (d, p))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs
}

fn zero_mass(distances: &[f64], weights: &[f64]) -> f64 {
    distances
        .iter()
        .zip(weights)
        .filter(|(d, _)| **d == 0.0)
        .map(|(_, p)| p)
        .sum()
}

/// Dual minimization over breakpoints for a raw distance/weight instance.
pub fn worst_case_dual(distances: &[f64], weights: &[f64], epsilon: f64) -> Result<WorstCaseResult> {
    check_epsilon(epsilon)?;
    check_instance(distances, weights)?;
    let m0 = zero_mass(distances, weights);
    if epsilon == 0.0 {
        return Ok(WorstCaseResult {
            value: m0,
            t_star: f64::INFINITY,
        });
    }
    let positive = sorted_positive(distances, weights);
    // t -> 0+: every point at finite distance contributes its full weight.
    let mut best = WorstCaseResult {
        value: m0 + positive.iter().map(|(_, p)| p).sum::<f64>(),
        t_star: 0.0,
    };
    // At t = 1/d_k only points strictly closer than d_k contribute; ties
    // contribute zero so a running prefix over the sorted order suffices.
    let mut prefix_mass = 0.0;
    let mut prefix_moment = 0.0;
    for &(dk, pk) in &positive {
        let t = 1.0 / dk;
        let value = epsilon * t + m0 + prefix_mass - t * prefix_moment;
        if value < best.value {
            best = WorstCaseResult { value, t_star: t };
        }
        prefix_mass += pk;
        prefix_moment += pk * dk;
    }
    best.value = best.value.clamp(0.0, 1.0);
    Ok(best)
}

/// Greedy fractional knapsack: take all zero-distance mass, then fill the
/// cheapest (closest) points until the transport budget `epsilon` is spent.
pub fn worst_case_knapsack_from(distances: &[f64], weights: &[f64], epsilon: f64) -> Result<f64> {
    check_epsilon(epsilon)?;
    check_instance(distances, weights)?;
    let mut value = zero_mass(distances, weights);
    let mut budget = epsilon;
    for (d, p) in sorted_positive(distances, weights) {
        let cost = d * p;
        if cost <= budget {
            value += p;
            budget -= cost;
        } else {
            value += budget / d;
            break;
        }
    }
    Ok(value.min(1.0))
}

/// Worst-case misclassification probability of `h` over the ball of radius
/// `epsilon`, via the one-dimensional dual.
pub fn worst_case_prob_dual(ds: &Dataset, h: &Hyperplane, epsilon: f64) -> Result<WorstCaseResult> {
    worst_case_dual(&snapped_distances(h, ds), ds.weights(), epsilon)
}

/// Same quantity as [`worst_case_prob_dual`] through the knapsack primal.
pub fn worst_case_prob_knapsack(ds: &Dataset, h: &Hyperplane, epsilon: f64) -> Result<f64> {
    worst_case_knapsack_from(&snapped_distances(h, ds), ds.weights(), epsilon)
}

/// `CVaR_rho` of a nonnegative distance variable (small values are risky).
pub fn cvar_from(distances: &[f64], weights: &[f64], rho: f64) -> Result<CvarResult> {
    check_rho(rho)?;
    check_instance(distances, weights)?;
    let positive = sorted_positive(distances, weights);
    let finite_mass: f64 = zero_mass(distances, weights) + positive.iter().map(|(_, p)| p).sum::<f64>();
    if rho - finite_mass > 1e-15 {
        // Infinite distances keep the objective increasing forever.
        return Ok(CvarResult {
            value: f64::INFINITY,
            scaled: f64::INFINITY,
            t_star: f64::INFINITY,
        });
    }
    // g(t) = rho*t - sum_{d_j < t} p_j (t - d_j); g(0+) = 0.
    let mut best_scaled = 0.0;
    let mut best_t = 0.0;
    let mut below_mass = zero_mass(distances, weights);
    let mut below_moment = 0.0;
    for &(dk, pk) in &positive {
        let g = rho * dk - dk * below_mass + below_moment;
        if g > best_scaled {
            best_scaled = g;
            best_t = dk;
        }
        below_mass += pk;
        below_moment += pk * dk;
    }
    Ok(CvarResult {
        value: best_scaled / rho,
        scaled: best_scaled,
        t_star: best_t,
    })
}

pub fn cvar_distance(ds: &Dataset, h: &Hyperplane, rho: f64) -> Result<CvarResult> {
    cvar_from(&snapped_distances(h, ds), ds.weights(), rho)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChanceCvarCheck {
    /// Worst-case misclassification probability is at most `rho`.
    pub chance_holds: bool,
    /// `rho * CVaR_rho >= epsilon`.
    pub cvar_holds: bool,
}

pub fn check_chance_cvar_from(distances: &[f64], weights: &[f64], epsilon: f64, rho: f64) -> Result<ChanceCvarCheck> {
    if !(epsilon > 0.0) {
        return Err(Error::invalid("epsilon", format!("must be positive, got {epsilon}")));
    }
    let worst = worst_case_dual(distances, weights, epsilon)?;
    let cvar = cvar_from(distances, weights, rho)?;
    Ok(ChanceCvarCheck {
        chance_holds: worst.value <= rho,
        cvar_holds: cvar.scaled >= epsilon,
    })
}

/// Evaluates both sides of the chance-constraint / CVaR equivalence.
pub fn check_chance_cvar(ds: &Dataset, h: &Hyperplane, epsilon: f64, rho: f64) -> Result<ChanceCvarCheck> {
    check_chance_cvar_from(&snapped_distances(h, ds), ds.weights(), epsilon, rho)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvarRadius {
    /// `rho * max_h CVaR_rho(h)` over the candidates.
    #[serde(with = "crate::serde_real")]
    pub epsilon: f64,
    /// Candidates attaining the maximum (ties within 1e-10).
    pub argmax: Vec<usize>,
}

/// Radius at which the best CVaR candidates have worst-case error exactly
/// `rho`.
pub fn cvar_radius(ds: &Dataset, candidates: &[Hyperplane], rho: f64) -> Result<CvarRadius> {
    if candidates.is_empty() {
        return Err(Error::invalid("candidates", "at least one candidate is required"));
    }
    let scaled = candidates
        .iter()
        .map(|h| cvar_distance(ds, h, rho).map(|c| c.scaled))
        .collect::<Result<Vec<f64>>>()?;
    let epsilon = scaled.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let argmax = scaled
        .iter()
        .enumerate()
        .filter(|(_, &s)| s == epsilon || (epsilon - s).abs() <= 1e-10)
        .map(|(i, _)| i)
        .collect();
    Ok(CvarRadius { epsilon, argmax })
}

#[cfg(test)]
mod tests {
    use super::*;

    const HALF: [f64; 2] = [0.5, 0.5];
    const D01: [f64; 2] = [0.0, 1.0];

    /// Dataset on the line whose distances under `w = 1, b = 0` are `d`.
    fn line_dataset(d: &[f64], p: &[f64]) -> Dataset {
        Dataset::new(1, d.to_vec(), vec![1.0; d.len()], p.to_vec()).unwrap()
    }

    fn unit() -> Hyperplane {
        Hyperplane::new(vec![1.0], 0.0)
    }

    #[test]
    fn dual_example() {
        let r = worst_case_dual(&D01, &HALF, 0.25).unwrap();
        assert_eq!(r.value, 0.75);
        assert_eq!(r.t_star, 1.0);
        let ds = line_dataset(&D01, &HALF);
        assert_eq!(worst_case_prob_dual(&ds, &unit(), 0.25).unwrap(), r);
    }

    #[test]
    fn zero_radius_is_nominal_mass() {
        let ds = crate::data::generate_separable(40, 2, 6).unwrap();
        let h = Hyperplane::new(vec![0.3, 1.0], 0.5);
        let profile = crate::geometry::margin_profile(&h, &ds);
        let r = worst_case_prob_dual(&ds, &h, 0.0).unwrap();
        assert!((r.value - profile.misclass_mass).abs() < 1e-12);
        assert_eq!(r.t_star, f64::INFINITY);
        assert!((worst_case_prob_knapsack(&ds, &h, 0.0).unwrap() - profile.misclass_mass).abs() < 1e-12);
    }

    #[test]
    fn all_misclassified() {
        for eps in [0.0, 0.1, 10.0] {
            assert_eq!(worst_case_dual(&[0.0; 3], &[0.2, 0.3, 0.5], eps).unwrap().value, 1.0);
            assert_eq!(worst_case_knapsack_from(&[0.0; 3], &[0.2, 0.3, 0.5], eps).unwrap(), 1.0);
        }
    }

    #[test]
    fn knapsack_examples() {
        assert_eq!(worst_case_knapsack_from(&D01, &HALF, 0.25).unwrap(), 0.75);
        let d = [0.0, 2.0, 3.0, 0.5];
        let p = [0.1, 0.2, 0.3, 0.4];
        let total: f64 = d.iter().zip(&p).map(|(a, b)| a * b).sum();
        assert!((worst_case_knapsack_from(&d, &p, total).unwrap() - 1.0).abs() < 1e-15);
        assert!((worst_case_knapsack_from(&d, &p, total * 3.0).unwrap() - 1.0).abs() < 1e-15);
        // small radius: misclassified mass plus eps over the margin
        let eps = 0.9 * (0.5 * 0.4);
        let v = worst_case_knapsack_from(&d, &p, eps).unwrap();
        assert!((v - (0.1 + eps / 0.5)).abs() < 1e-15);
    }

    #[test]
    fn infinite_distances_are_unreachable() {
        let d = [f64::INFINITY, 1.0];
        let r = worst_case_dual(&d, &HALF, 10.0).unwrap();
        assert_eq!(r.value, 0.5);
        assert_eq!(r.t_star, 0.0);
        assert_eq!(worst_case_knapsack_from(&d, &HALF, 10.0).unwrap(), 0.5);
        let flat = Hyperplane::new(vec![0.0], 1.0);
        let ds = line_dataset(&[1.0, 2.0], &HALF);
        assert_eq!(worst_case_prob_dual(&ds, &flat, 3.0).unwrap().value, 0.0);
    }

    #[test]
    fn negative_radius_rejected() {
        assert!(worst_case_dual(&D01, &HALF, -0.1).is_err());
        assert!(worst_case_knapsack_from(&D01, &HALF, -0.1).is_err());
    }

    #[test]
    fn cvar_examples() {
        let c = cvar_from(&D01, &HALF, 0.75).unwrap();
        assert!((c.value - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(c.scaled, 0.25);
        assert_eq!(c.t_star, 1.0);
        let c = cvar_from(&D01, &HALF, 0.5).unwrap();
        assert_eq!(c.value, 0.0);
        for rho in [0.1, 0.5, 0.9] {
            let c = cvar_from(&[2.5; 4], &[0.25; 4], rho).unwrap();
            assert!((c.value - 2.5).abs() < 1e-15);
        }
        assert!(cvar_from(&D01, &HALF, 0.0).is_err());
        assert!(cvar_from(&D01, &HALF, 1.0).is_err());
    }

    #[test]
    fn cvar_with_unreachable_points() {
        let d = [f64::INFINITY, f64::INFINITY, 1.0];
        let p = [0.25, 0.25, 0.5];
        assert_eq!(cvar_from(&d, &p, 0.75).unwrap().value, f64::INFINITY);
        let c = cvar_from(&d, &p, 0.4).unwrap();
        assert!((c.value - 1.0).abs() < 1e-15);
    }

    #[test]
    fn chance_cvar_examples() {
        let c = check_chance_cvar_from(&D01, &HALF, 0.25, 0.75).unwrap();
        assert!(c.chance_holds && c.cvar_holds);
        let c = check_chance_cvar_from(&D01, &HALF, 0.25, 0.5).unwrap();
        assert!(!c.chance_holds && !c.cvar_holds);
        let c = check_chance_cvar_from(&D01, &HALF, 5.0, 0.99).unwrap();
        assert_eq!(c.chance_holds, c.cvar_holds);
        assert!(!c.chance_holds);
        assert!(check_chance_cvar_from(&D01, &HALF, 0.0, 0.5).is_err());
    }

    #[test]
    fn cvar_radius_examples() {
        let ds = line_dataset(&[1.0, 2.0, 4.0], &[0.2, 0.3, 0.5]);
        let h = unit();
        let single = cvar_radius(&ds, std::slice::from_ref(&h), 0.4).unwrap();
        assert_eq!(single.epsilon, 0.4 * cvar_distance(&ds, &h, 0.4).unwrap().value);
        assert_eq!(single.argmax, vec![0]);

        let constant = line_dataset(&[3.0, 3.0], &HALF);
        let r = cvar_radius(&constant, std::slice::from_ref(&h), 0.3).unwrap();
        assert!((r.epsilon - 0.9).abs() < 1e-15);
    }

    #[test]
    fn cvar_radius_gives_worst_case_equal_to_rho() {
        let ds = Dataset::uniform(1, vec![-2.0, -1.0, 0.5, 1.0, 3.0], vec![-1.0, 1.0, -1.0, 1.0, 1.0]).unwrap();
        let candidates: Vec<Hyperplane> = [-1.0, 1.0]
            .iter()
            .flat_map(|&w| (-300..=300).map(move |k| Hyperplane::new(vec![w], k as f64 * 1e-2)))
            .collect();
        for rho in [0.3, 0.5, 0.7] {
            let r = cvar_radius(&ds, &candidates, rho).unwrap();
            assert!(r.epsilon > 0.0);
            for &i in &r.argmax {
                let wc = worst_case_prob_dual(&ds, &candidates[i], r.epsilon).unwrap();
                assert!((wc.value - rho).abs() < 1e-9, "rho {rho}: {}", wc.value);
            }
        }
    }

    #[test]
    fn scaled_cvar_is_monotone_in_rho() {
        let d = [0.0, 0.3, 1.2, 2.0, 0.7];
        let p = [0.1, 0.2, 0.3, 0.25, 0.15];
        let mut prev = 0.0;
        for k in 1..100 {
            let s = cvar_from(&d, &p, k as f64 / 100.0).unwrap().scaled;
            assert!(s >= prev - 1e-15);
            prev = s;
        }
    }
}
