//! Distance to misclassification for linear classifiers under the Euclidean
//! norm, margin profiles, and the generalized maximum margin over a finite
//! candidate set.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};

/// Classifier `x -> sign(<w,x> + b)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperplane {
    pub w: Vec<f64>,
    pub b: f64,
}

impl Hyperplane {
    pub fn new(w: Vec<f64>, b: f64) -> Self {
        Hyperplane { w, b }
    }

    /// `(e_1, 0)` in dimension `d`, the generating hyperplane of the
    /// synthetic data.
    pub fn canonical(d: usize) -> Self {
        let mut w = vec![0.0; d];
        w[0] = 1.0;
        Hyperplane { w, b: 0.0 }
    }

    /// Splits a stacked `(w, b)` vector.
    pub fn from_stacked(x: &[f64]) -> Self {
        let (w, b) = x.split_at(x.len() - 1);
        Hyperplane { w: w.to_vec(), b: b[0] }
    }

    pub fn stacked(&self) -> Vec<f64> {
        let mut x = self.w.clone();
        x.push(self.b);
        x
    }

    pub fn dim(&self) -> usize {
        self.w.len()
    }

    pub fn norm(&self) -> f64 {
        norm(&self.w)
    }

    /// `y(<w,x> + b)`.
    pub fn score(&self, x: &[f64], y: f64) -> f64 {
        y * (dot(&self.w, x) + self.b)
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        Hyperplane {
            w: self.w.iter().map(|v| v * alpha).collect(),
            b: self.b * alpha,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.b.is_finite() && self.w.iter().all(|v| v.is_finite())
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Euclidean distance from `(x, y)` to the region `h` misclassifies.
///
/// With `w = 0` the classifier is constant: points it gets right can never be
/// moved across, so their distance is `+inf`.
pub fn distance(h: &Hyperplane, x: &[f64], y: f64) -> f64 {
    let wn = h.norm();
    if wn > 0.0 {
        h.score(x, y).max(0.0) / wn
    } else if y * h.b > 0.0 {
        f64::INFINITY
    } else {
        0.0
    }
}

/// Distances of every point in `ds`.
pub fn distances(h: &Hyperplane, ds: &Dataset) -> Vec<f64> {
    ds.iter().map(|(x, y, _)| distance(h, x, y)).collect()
}

/// Whether a point at distance `dist` counts as misclassified, allowing for
/// rounding on the decision boundary.
pub fn is_misclassified(dist: f64, x: &[f64]) -> bool {
    dist <= 1e-12 * (1.0 + norm(x))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginProfile {
    /// `I(w)`, indices at distance zero.
    pub misclassified: Vec<usize>,
    /// Smallest distance among correctly classified points; `+inf` when all
    /// are misclassified.
    #[serde(with = "crate::serde_real")]
    pub eta: f64,
    /// Probability mass of `misclassified`.
    pub misclass_mass: f64,
}

pub fn margin_profile(h: &Hyperplane, ds: &Dataset) -> MarginProfile {
    let mut misclassified = Vec::new();
    let mut eta = f64::INFINITY;
    let mut mass = 0.0;
    for (i, (x, y, p)) in ds.iter().enumerate() {
        let dist = distance(h, x, y);
        if is_misclassified(dist, x) {
            misclassified.push(i);
            mass += p;
        } else {
            eta = eta.min(dist);
        }
    }
    MarginProfile {
        misclassified,
        eta,
        misclass_mass: mass,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneralizedMargin {
    /// Smallest misclassified mass among the candidates.
    pub rho_star: f64,
    /// Largest margin among candidates attaining `rho_star`.
    #[serde(with = "crate::serde_real")]
    pub gamma_star: f64,
    /// Smallest subset-weight sum strictly above `rho_star`; `+inf` when
    /// `rho_star` is already the total mass.
    #[serde(with = "crate::serde_real")]
    pub rho_bar: f64,
}

/// Mass ties within this tolerance are treated as equal.
const MASS_TOL: f64 = 1e-12;

/// Exhaustive subset enumeration is used up to this many points.
pub const EXHAUSTIVE_MAX_POINTS: usize = 20;
/// Beyond this many points `rho_bar` is not computed at all.
pub const RHO_BAR_MAX_POINTS: usize = 30;

/// Generalized maximum margin restricted to a finite candidate set.
pub fn generalized_margin(ds: &Dataset, candidates: &[Hyperplane]) -> Result<GeneralizedMargin> {
    if candidates.is_empty() {
        return Err(Error::invalid("candidates", "at least one candidate is required"));
    }
    if ds.len() > RHO_BAR_MAX_POINTS {
        return Err(Error::invalid(
            "dataset",
            format!("{} points exceeds the limit of {RHO_BAR_MAX_POINTS}", ds.len()),
        ));
    }
    if let Some(h) = candidates.iter().find(|h| h.dim() != ds.dim()) {
        return Err(Error::invalid(
            "candidates",
            format!("hyperplane of dimension {} for {}-dimensional data", h.dim(), ds.dim()),
        ));
    }
    let profiles: Vec<MarginProfile> = candidates.par_iter().map(|h| margin_profile(h, ds)).collect();
    let rho_star = profiles.iter().map(|p| p.misclass_mass).fold(f64::INFINITY, f64::min);
    let gamma_star = profiles
        .iter()
        .filter(|p| p.misclass_mass <= rho_star + MASS_TOL)
        .map(|p| p.eta)
        .fold(f64::NEG_INFINITY, f64::max);
    let rho_bar = if ds.len() <= EXHAUSTIVE_MAX_POINTS {
        next_subset_mass_exhaustive(ds.weights(), rho_star)
    } else {
        next_subset_mass_observed(ds.weights(), &profiles, rho_star)
    };
    Ok(GeneralizedMargin {
        rho_star,
        gamma_star,
        rho_bar,
    })
}

/// Smallest sum over all subsets of `weights` exceeding `floor`.
fn next_subset_mass_exhaustive(weights: &[f64], floor: f64) -> f64 {
    let mut sorted = weights.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let n = sorted.len();
    let mut best = f64::INFINITY;
    for mask in 1u32..(1u32 << n) {
        let mut sum = 0.0;
        for (j, &p) in sorted.iter().enumerate() {
            if mask & (1 << j) != 0 {
                sum += p;
            }
        }
        if sum > floor + MASS_TOL && sum < best {
            best = sum;
        }
    }
    best
}

/// Candidate-set estimate of `rho_bar`: observed misclassified masses, each
/// extended by one more point, and single points.
fn next_subset_mass_observed(weights: &[f64], profiles: &[MarginProfile], floor: f64) -> f64 {
    let mut best = f64::INFINITY;
    let mut consider = |s: f64| {
        if s > floor + MASS_TOL && s < best {
            best = s;
        }
    };
    for &p in weights {
        consider(p);
    }
    for profile in profiles {
        consider(profile.misclass_mass);
        let mut inside = vec![false; weights.len()];
        for &i in &profile.misclassified {
            inside[i] = true;
        }
        for (j, &p) in weights.iter().enumerate() {
            if !inside[j] {
                consider(profile.misclass_mass + p);
            }
        }
    }
    best
}

/// Sine of the angle between `u` and `v`.
pub fn sin_angle(u: &[f64], v: &[f64]) -> Result<f64> {
    let uu = dot(u, u);
    let vv = dot(v, v);
    if uu == 0.0 || vv == 0.0 {
        return Err(Error::ZeroVector);
    }
    let uv = dot(u, v);
    Ok((1.0 - uv * uv / (uu * vv)).max(0.0).sqrt())
}
