//! Weighted empirical objectives over `(w, b)`:
//!
//! ```text
//! reg(w) + sum_i p_i loss(y_i(<w,x_i> + b))
//! ```
//!
//! with `reg` either `eps*||w||` or `eps_bar/2 * ||w||^2`. The intercept is
//! never regularized. Gradients are stacked as `(d/dw, d/db)`.
//!
//! The data sum is split into fixed chunks of [`CHUNK`] rows reduced in
//! order, so the result does not depend on the thread count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::geometry::{dot, norm, Hyperplane};
use crate::loss::{LossSpec, ScalarLoss};
use crate::solve::Objective;

/// Rows per parallel reduction chunk.
pub const CHUNK: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegKind {
    /// `eps * ||w||`, the exact reformulation of the robust problem.
    Norm,
    /// `eps_bar / 2 * ||w||^2`, used for training.
    SquaredNorm,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveSpec {
    pub loss: LossSpec,
    pub reg_kind: RegKind,
    pub reg_weight: f64,
    /// Always false: the intercept is left unregularized.
    pub regularize_intercept: bool,
}

impl ObjectiveSpec {
    pub fn new(loss: LossSpec, reg_kind: RegKind, reg_weight: f64) -> Result<Self> {
        let spec = ObjectiveSpec {
            loss,
            reg_kind,
            reg_weight,
            regularize_intercept: false,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Squared-norm training objective `F_{eps_bar, sigma}`.
    pub fn squared(loss: LossSpec, eps_bar: f64) -> Result<Self> {
        Self::new(loss, RegKind::SquaredNorm, eps_bar)
    }

    pub fn validate(&self) -> Result<()> {
        self.loss.validate()?;
        if !(self.reg_weight >= 0.0 && self.reg_weight.is_finite()) {
            return Err(Error::invalid(
                "reg_weight",
                format!("must be finite and nonnegative, got {}", self.reg_weight),
            ));
        }
        if self.regularize_intercept {
            return Err(Error::invalid(
                "regularize_intercept",
                "intercept regularization is not supported",
            ));
        }
        Ok(())
    }

    pub fn value(&self, ds: &Dataset, h: &Hyperplane) -> f64 {
        regularizer(self.reg_kind, self.reg_weight, &h.w) + data_term(&self.loss, ds, h)
    }

    /// Objective value and stacked gradient.
    pub fn eval(&self, ds: &Dataset, h: &Hyperplane) -> Result<(f64, Vec<f64>)> {
        eval_with(&self.loss, self.reg_kind, self.reg_weight, ds, h)
    }
}

fn regularizer(kind: RegKind, weight: f64, w: &[f64]) -> f64 {
    match kind {
        RegKind::Norm => weight * norm(w),
        RegKind::SquaredNorm => 0.5 * weight * dot(w, w),
    }
}

fn data_term<L: ScalarLoss + Sync>(loss: &L, ds: &Dataset, h: &Hyperplane) -> f64 {
    let d = ds.dim();
    let rows = ds
        .points()
        .par_chunks(d * CHUNK)
        .zip(ds.labels().par_chunks(CHUNK))
        .zip(ds.weights().par_chunks(CHUNK));
    let partial: Vec<f64> = rows
        .map(|((xs, ys), ps)| {
            let mut acc = Neumaier::default();
            for (x, (&y, &p)) in xs.chunks_exact(d).zip(ys.iter().zip(ps)) {
                acc.add(p * loss.value(h.score(x, y)));
            }
            acc.total()
        })
        .collect();
    partial.into_iter().sum()
}

/// Compensated summation for the objective value, which keeps rounding
/// noise in `f` well below the line search's decrease slack.
#[derive(Default)]
struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Objective and gradient for an arbitrary differentiable loss.
pub fn eval_with<L: ScalarLoss + Sync>(
    loss: &L,
    reg_kind: RegKind,
    reg_weight: f64,
    ds: &Dataset,
    h: &Hyperplane,
) -> Result<(f64, Vec<f64>)> {
    let d = ds.dim();
    if h.dim() != d {
        return Err(Error::invalid(
            "hyperplane",
            format!("dimension {} for {d}-dimensional data", h.dim()),
        ));
    }
    // Each chunk yields (value, d/dw..., d/db).
    let rows = ds
        .points()
        .par_chunks(d * CHUNK)
        .zip(ds.labels().par_chunks(CHUNK))
        .zip(ds.weights().par_chunks(CHUNK));
    let partial: Vec<Option<Vec<f64>>> = rows
        .map(|((xs, ys), ps)| {
            let mut value = Neumaier::default();
            let mut acc = vec![0.0; d + 2];
            for (x, (&y, &p)) in xs.chunks_exact(d).zip(ys.iter().zip(ps)) {
                let r = h.score(x, y);
                value.add(p * loss.value(r));
                let coef = p * loss.deriv(r)? * y;
                for (a, xi) in acc[1..=d].iter_mut().zip(x) {
                    *a += coef * xi;
                }
                acc[d + 1] += coef;
            }
            acc[0] = value.total();
            Some(acc)
        })
        .collect();
    let mut total = vec![0.0; d + 2];
    for chunk in partial {
        let chunk = chunk.ok_or(Error::NotSmooth)?;
        for (t, c) in total.iter_mut().zip(chunk) {
            *t += c;
        }
    }
    let value = total[0] + regularizer(reg_kind, reg_weight, &h.w);
    let mut grad = total.split_off(1);
    match reg_kind {
        RegKind::SquaredNorm => {
            for (g, w) in grad.iter_mut().zip(&h.w) {
                *g += reg_weight * w;
            }
        }
        RegKind::Norm => {
            let wn = h.norm();
            if wn > 0.0 {
                for (g, w) in grad.iter_mut().zip(&h.w) {
                    *g += reg_weight * w / wn;
                }
            }
        }
    }
    if !value.is_finite() || grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFinite {
            what: format!("objective value {value} or its gradient"),
        });
    }
    Ok((value, grad))
}

/// An [`ObjectiveSpec`] bound to a dataset, as a function of stacked `(w, b)`.
#[derive(Debug, Clone, Copy)]
pub struct EmpiricalObjective<'a> {
    pub spec: ObjectiveSpec,
    pub data: &'a Dataset,
}

impl<'a> EmpiricalObjective<'a> {
    pub fn new(spec: ObjectiveSpec, data: &'a Dataset) -> Result<Self> {
        spec.validate()?;
        if !spec.loss.is_smooth() {
            return Err(Error::NotSmooth);
        }
        Ok(EmpiricalObjective { spec, data })
    }
}

impl Objective for EmpiricalObjective<'_> {
    fn dim(&self) -> usize {
        self.data.dim() + 1
    }

    fn value_grad(&self, x: &[f64], grad: &mut [f64]) -> Result<f64> {
        let (value, g) = self.spec.eval(self.data, &Hyperplane::from_stacked(x))?;
        grad.copy_from_slice(&g);
        Ok(value)
    }
}

/// Normalized robust-problem variables `(w0, b0, t)` recovered from `(w, b)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DroVariables {
    pub w0: Vec<f64>,
    pub b0: f64,
    pub t: f64,
}

pub fn to_dro_variables(h: &Hyperplane) -> DroVariables {
    let t = h.norm();
    if t > 0.0 {
        DroVariables {
            w0: h.w.iter().map(|v| v / t).collect(),
            b0: h.b / t,
            t,
        }
    } else {
        DroVariables {
            w0: vec![0.0; h.dim()],
            b0: h.b,
            t: 0.0,
        }
    }
}

impl DroVariables {
    /// Inverse map `(t*w0, t*b0)`; only meaningful when `t > 0`.
    pub fn to_hyperplane(&self) -> Hyperplane {
        Hyperplane::new(self.w0.iter().map(|v| v * self.t).collect(), self.b0 * self.t)
    }
}

/// Radius `eps_bar * ||w||` of the norm-regularized problem matched by a
/// squared-norm solution.
pub fn imputed_epsilon(reg_weight_bar: f64, h: &Hyperplane) -> Result<f64> {
    if !(reg_weight_bar >= 0.0) {
        return Err(Error::invalid(
            "epsilon_bar",
            format!("must be nonnegative, got {reg_weight_bar}"),
        ));
    }
    Ok(reg_weight_bar * h.norm())
}
