//! The two-dimensional uniform model: `x` uniform on `[-1,1]^2`, labels
//! `sign(x_1)`, no intercept. After folding the label into the first
//! coordinate the regularized ramp-loss objective becomes
//!
//! ```text
//! F(w) = eps/2 ||w||^2 + E[ L_R(w1 r + w2 x2) ],   r ~ U(0,1), x2 ~ U(-1,1).
//! ```
//!
//! Expectations are computed exactly: the rectangle is clipped against the
//! lines `s = 0` and `s = 1` (`s = w1 r + w2 x2`) and the resulting convex
//! polygons are integrated with shoelace moment formulas.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::geometry::Hyperplane;
use crate::loss::{ramp, smoothed_ramp_deriv};

/// Below this norm the polygon decomposition degenerates and the
/// expectation falls back to midpoint quadrature.
pub const DEGENERATE_NORM: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformModel {
    pub epsilon: f64,
    pub grid_per_axis: usize,
}

impl UniformModel {
    pub fn new(epsilon: f64) -> Result<Self> {
        Self::with_grid(epsilon, 200)
    }

    pub fn with_grid(epsilon: f64, grid_per_axis: usize) -> Result<Self> {
        let m = UniformModel { epsilon, grid_per_axis };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::invalid(
                "epsilon",
                format!("must be positive, got {}", self.epsilon),
            ));
        }
        if self.grid_per_axis < 200 {
            return Err(Error::invalid(
                "grid_per_axis",
                format!("must be at least 200, got {}", self.grid_per_axis),
            ));
        }
        Ok(())
    }
}

type Point = [f64; 2];

/// Keeps the part of a convex polygon with `a . p <= c`.
fn clip(poly: &[Point], a: Point, c: f64) -> Vec<Point> {
    let mut out = Vec::with_capacity(poly.len() + 1);
    let side = |p: &Point| a[0] * p[0] + a[1] * p[1] - c;
    for (i, p) in poly.iter().enumerate() {
        let q = &poly[(i + 1) % poly.len()];
        let (sp, sq) = (side(p), side(q));
        if sp <= 0.0 {
            out.push(*p);
        }
        if (sp < 0.0 && sq > 0.0) || (sp > 0.0 && sq < 0.0) {
            let t = sp / (sp - sq);
            out.push([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]);
        }
    }
    out
}

/// Area and first moments `(int 1, int u, int v)` of a simple polygon.
fn polygon_moments(poly: &[Point]) -> (f64, f64, f64) {
    if poly.len() < 3 {
        return (0.0, 0.0, 0.0);
    }
    let (mut a, mut mu, mut mv) = (0.0, 0.0, 0.0);
    for (i, p) in poly.iter().enumerate() {
        let q = &poly[(i + 1) % poly.len()];
        let cross = p[0] * q[1] - q[0] * p[1];
        a += cross;
        mu += (p[0] + q[0]) * cross;
        mv += (p[1] + q[1]) * cross;
    }
    (a / 2.0, mu / 6.0, mv / 6.0)
}

const RECTANGLE: [Point; 4] = [[0.0, -1.0], [1.0, -1.0], [1.0, 1.0], [0.0, 1.0]];

/// Expectations over the `(r, x2)` rectangle that determine `F` and its
/// gradient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StripMoments {
    /// `P(s <= 0)`.
    pub p_nonpositive: f64,
    /// `P(0 < s < 1)`.
    pub p_strip: f64,
    /// `E[1(0 < s < 1) r]`.
    pub strip_r: f64,
    /// `E[1(0 < s < 1) x2]`.
    pub strip_x2: f64,
}

/// Exact moments for `w != 0` (density 1/2 on the rectangle).
pub fn strip_moments(w: Point) -> Result<StripMoments> {
    if !(w[0].hypot(w[1]) >= DEGENERATE_NORM) {
        return Err(Error::ZeroVector);
    }
    let below = clip(&RECTANGLE, w, 0.0);
    let strip = clip(&clip(&RECTANGLE, w, 1.0), [-w[0], -w[1]], 0.0);
    let (a0, _, _) = polygon_moments(&below);
    let (a, mr, mx) = polygon_moments(&strip);
    Ok(StripMoments {
        p_nonpositive: a0 / 2.0,
        p_strip: a / 2.0,
        strip_r: mr / 2.0,
        strip_x2: mx / 2.0,
    })
}

/// `E[L_R(w1 r + w2 x2)]`.
pub fn expected_ramp(model: &UniformModel, w: Point) -> f64 {
    match strip_moments(w) {
        Ok(m) => m.p_nonpositive + m.p_strip - w[0] * m.strip_r - w[1] * m.strip_x2,
        Err(_) => expected_ramp_midpoint(w, model.grid_per_axis),
    }
}

/// Composite midpoint rule on a `grid x grid` partition of the rectangle.
pub fn expected_ramp_midpoint(w: Point, grid: usize) -> f64 {
    let h = 1.0 / grid as f64;
    let rows: Vec<f64> = (0..grid)
        .into_par_iter()
        .map(|i| {
            let r = (i as f64 + 0.5) * h;
            (0..grid)
                .map(|j| {
                    let x2 = -1.0 + 2.0 * (j as f64 + 0.5) * h;
                    ramp(w[0] * r + w[1] * x2)
                })
                .sum::<f64>()
        })
        .collect();
    rows.into_iter().sum::<f64>() * h * h
}

pub fn f_epsilon(model: &UniformModel, w: Point) -> f64 {
    0.5 * model.epsilon * (w[0] * w[0] + w[1] * w[1]) + expected_ramp(model, w)
}

/// Gradient of `F`, `(eps w1 - E[1 r], eps w2 - E[1 x2])`; zero exactly at
/// stationary points.
pub fn stationarity_residual(model: &UniformModel, w: Point) -> Result<Point> {
    let m = strip_moments(w)?;
    Ok([model.epsilon * w[0] - m.strip_r, model.epsilon * w[1] - m.strip_x2])
}

fn inf_norm(v: Point) -> f64 {
    v[0].abs().max(v[1].abs())
}

/// One-sided derivative of `F` at the origin along `u`, from difference
/// quotients at three step sizes extrapolated to zero step.
pub fn origin_directional_derivative(model: &UniformModel, u: Point) -> f64 {
    let f0 = f_epsilon(model, [0.0, 0.0]);
    let alphas = [1e-3, 1e-4, 1e-5];
    let mut q: Vec<f64> = alphas
        .iter()
        .map(|&a| (f_epsilon(model, [a * u[0], a * u[1]]) - f0) / a)
        .collect();
    // Neville's scheme evaluated at alpha = 0.
    for k in 1..alphas.len() {
        for i in (k..alphas.len()).rev() {
            let (ai, aik) = (alphas[i], alphas[i - k]);
            q[i] = (ai * q[i - 1] - aik * q[i]) / (ai - aik);
        }
    }
    q[alphas.len() - 1]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OriginDerivatives {
    pub along_plus_e1: f64,
    pub along_minus_e1: f64,
}

pub fn origin_directional_derivatives(model: &UniformModel) -> OriginDerivatives {
    OriginDerivatives {
        along_plus_e1: origin_directional_derivative(model, [1.0, 0.0]),
        along_minus_e1: origin_directional_derivative(model, [-1.0, 0.0]),
    }
}

/// Global minimizer `(w1(eps), 0)`.
pub fn closed_form_minimizer(epsilon: f64) -> Point {
    if epsilon <= 0.5 {
        [(2.0 * epsilon).powf(-1.0 / 3.0), 0.0]
    } else {
        [1.0 / (2.0 * epsilon), 0.0]
    }
}

/// `F` at the global minimizer.
pub fn closed_form_min_value(epsilon: f64) -> f64 {
    if epsilon <= 0.5 {
        3.0 * (epsilon / 32.0).cbrt()
    } else {
        1.0 - 1.0 / (8.0 * epsilon)
    }
}

/// `F(w1, 0)` for `w1 >= 0`.
pub fn axis_value(epsilon: f64, w1: f64) -> f64 {
    let reg = 0.5 * epsilon * w1 * w1;
    if w1 < 1.0 {
        reg + 1.0 - w1 / 2.0
    } else {
        reg + 1.0 / (2.0 * w1)
    }
}

/// `g(r) = 1/2 int x2 dx2` over the `x2` section of the strip at `r`, for
/// `w2 != 0`. Satisfies `g(r) + g(1/w1 - r) = 0`.
pub fn g_section(w: Point, r: f64) -> f64 {
    let (w1, w2) = (w[0], w[1]);
    let (a, b) = (-w1 * r / w2, (1.0 - w1 * r) / w2);
    let (lo, hi) = if w2 > 0.0 { (a, b) } else { (b, a) };
    let (lo, hi) = (lo.max(-1.0), hi.min(1.0));
    if hi > lo {
        0.25 * (hi * hi - lo * lo)
    } else {
        0.0
    }
}

/// `E[1(0 < s < 1) x2] = int_0^1 g(r) dr`, integrated exactly: `g` is
/// quadratic between the breakpoints where a section endpoint meets
/// `x2 = +-1`, so Simpson's rule on each piece is exact.
pub fn strip_x2_by_sections(w: Point) -> f64 {
    let (w1, w2) = (w[0], w[1]);
    if w2 == 0.0 {
        return 0.0;
    }
    let mut cuts = vec![0.0, 1.0];
    if w1 != 0.0 {
        for v in [w2, -w2, 1.0 - w2, 1.0 + w2] {
            let r = v / w1;
            if r > 0.0 && r < 1.0 {
                cuts.push(r);
            }
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.windows(2)
        .map(|c| {
            let (a, b) = (c[0], c[1]);
            (b - a) / 6.0 * (g_section(w, a) + 4.0 * g_section(w, 0.5 * (a + b)) + g_section(w, b))
        })
        .sum()
}

/// Largest deviation among the integration self-checks at `w`: the
/// antisymmetry of `g` on a few sample points and the agreement of the
/// polygon moment with the section integral.
pub fn integration_self_test(w: Point) -> Result<f64> {
    let m = strip_moments(w)?;
    let mut worst = (m.strip_x2 - strip_x2_by_sections(w)).abs();
    if w[0] > 0.0 && w[1] != 0.0 {
        for k in 0..=10 {
            let r = k as f64 / 10.0;
            worst = worst.max((g_section(w, r) + g_section(w, 1.0 / w[0] - r)).abs());
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StationaryPoint {
    pub w: Point,
    pub residual: f64,
    pub value: f64,
}

/// Residuals at or below this are accepted as stationary.
pub const STATIONARY_TOL: f64 = 1e-9;
/// Refined points closer than this to the origin are discarded: `F` is not
/// differentiable there.
pub const MIN_NORM: f64 = 1e-6;

fn newton_refine(model: &UniformModel, start: Point, lo: f64, hi: f64) -> Option<StationaryPoint> {
    let res = |w: Point| stationarity_residual(model, w).ok();
    let mut w = start;
    let mut r = res(w)?;
    for _ in 0..100 {
        if inf_norm(r) <= 1e-14 {
            break;
        }
        let mut jac = [[0.0; 2]; 2];
        for k in 0..2 {
            let h = 1e-7 * w[k].abs().max(1.0);
            let (mut wp, mut wm) = (w, w);
            wp[k] += h;
            wm[k] -= h;
            let (rp, rm) = (res(wp)?, res(wm)?);
            jac[0][k] = (rp[0] - rm[0]) / (2.0 * h);
            jac[1][k] = (rp[1] - rm[1]) / (2.0 * h);
        }
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        if !(det.abs() > 1e-300) {
            break;
        }
        let step = [
            -(jac[1][1] * r[0] - jac[0][1] * r[1]) / det,
            -(-jac[1][0] * r[0] + jac[0][0] * r[1]) / det,
        ];
        let mut t = 1.0;
        let mut accepted = false;
        while t > 1e-10 {
            let cand = [(w[0] + t * step[0]).clamp(lo, hi), (w[1] + t * step[1]).clamp(lo, hi)];
            if let Some(rc) = res(cand) {
                if inf_norm(rc) < inf_norm(r) {
                    w = cand;
                    r = rc;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    let residual = inf_norm(r);
    (residual <= STATIONARY_TOL && w[0].hypot(w[1]) >= MIN_NORM).then(|| StationaryPoint {
        w,
        residual,
        value: f_epsilon(model, w),
    })
}

/// Grid scan of `||grad F||_inf` over the cell centers of `[lo, hi]^2`.
/// Cells under `10 * cell width` that are local minima of the residual are
/// refined by damped Newton iterations; refinements that reach a residual
/// of [`STATIONARY_TOL`] away from the origin are returned, deduplicated.
pub fn scan_stationary_points(model: &UniformModel, lo: f64, hi: f64, grid: usize) -> Result<Vec<StationaryPoint>> {
    model.validate()?;
    if grid < 100 {
        return Err(Error::invalid("grid", format!("must be at least 100, got {grid}")));
    }
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::invalid("box", format!("need finite lo < hi, got [{lo}, {hi}]")));
    }
    let h = (hi - lo) / grid as f64;
    let threshold = 10.0 * h;
    let center = |i: usize| lo + (i as f64 + 0.5) * h;
    let resid: Vec<f64> = (0..grid * grid)
        .into_par_iter()
        .map(|k| {
            let w = [center(k / grid), center(k % grid)];
            stationarity_residual(model, w).map(inf_norm).unwrap_or(f64::INFINITY)
        })
        .collect();
    let at = |i: isize, j: isize| {
        if i < 0 || j < 0 || i >= grid as isize || j >= grid as isize {
            f64::INFINITY
        } else {
            resid[i as usize * grid + j as usize]
        }
    };
    let seeds: Vec<Point> = (0..grid * grid)
        .filter(|&k| {
            let v = resid[k];
            let (i, j) = ((k / grid) as isize, (k % grid) as isize);
            v < threshold && (-1..=1).all(|di| (-1..=1).all(|dj| (di == 0 && dj == 0) || v <= at(i + di, j + dj)))
        })
        .map(|k| [center(k / grid), center(k % grid)])
        .collect();
    let refined: Vec<StationaryPoint> = seeds
        .par_iter()
        .filter_map(|&s| newton_refine(model, s, lo, hi))
        .collect();
    let mut points: Vec<StationaryPoint> = Vec::new();
    for p in refined {
        let dup = points
            .iter()
            .any(|q| (q.w[0] - p.w[0]).abs().max((q.w[1] - p.w[1]).abs()) <= 1e-6);
        if !dup {
            points.push(p);
        }
    }
    points.sort_by(|a, b| a.value.total_cmp(&b.value));
    Ok(points)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelFlipBalance {
    pub first: f64,
    pub others: Vec<f64>,
}

/// Components of `-sum_i p_i psi'(y_i(<w,x_i> + b)) y_i x_i`, the data part
/// of the stationarity equation for `w`. Each term is a positive multiple of
/// `y_i x_i`, so the sign of the first component reflects how the correctly
/// labeled majority outweighs flipped labels.
pub fn label_flip_balance(ds: &Dataset, h: &Hyperplane, sigma: f64) -> Result<LabelFlipBalance> {
    if !(sigma > 0.0) {
        return Err(Error::invalid("sigma", format!("must be positive, got {sigma}")));
    }
    if h.dim() != ds.dim() {
        return Err(Error::invalid("hyperplane", "dimension does not match the data"));
    }
    let mut acc = vec![0.0; ds.dim()];
    for (x, y, p) in ds.iter() {
        let c = -p * smoothed_ramp_deriv(h.score(x, y), sigma) * y;
        for (a, xi) in acc.iter_mut().zip(x) {
            *a += c * xi;
        }
    }
    let others = acc.split_off(1);
    Ok(LabelFlipBalance { first: acc[0], others })
}
