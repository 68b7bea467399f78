//! Scalar losses of the classification score `r = y(<w,x> + b)`.
//!
//! The smoothed ramp replaces both max-terms of
//! `ramp(r) = max{0, 1-r} - max{0, -r}` by a softmax with temperature
//! `sigma`, giving
//!
//! ```text
//! psi(r) = sigma*log(1 + exp((1-r)/sigma)) - sigma*log(1 + exp(-r/sigma))
//! ```
//!
//! Every softmax is evaluated as `max + sigma*log1p(exp(-|a-b|/sigma))`, so
//! nothing of size `exp(1/sigma)` is ever formed.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    Ramp,
    SmoothedRamp,
    SmoothedHinge,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossSpec {
    pub kind: LossKind,
    /// Smoothing temperature; ignored by [`LossKind::Ramp`].
    pub sigma: f64,
}

impl LossSpec {
    pub fn ramp() -> Self {
        LossSpec {
            kind: LossKind::Ramp,
            sigma: 0.0,
        }
    }

    pub fn smoothed_ramp(sigma: f64) -> Result<Self> {
        check_sigma(sigma)?;
        Ok(LossSpec {
            kind: LossKind::SmoothedRamp,
            sigma,
        })
    }

    pub fn smoothed_hinge(sigma: f64) -> Result<Self> {
        check_sigma(sigma)?;
        Ok(LossSpec {
            kind: LossKind::SmoothedHinge,
            sigma,
        })
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            LossKind::Ramp => Ok(()),
            _ => check_sigma(self.sigma),
        }
    }

    pub fn is_smooth(&self) -> bool {
        self.kind != LossKind::Ramp
    }
}

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma.is_finite() && sigma > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid("sigma", format!("must be positive, got {sigma}")))
    }
}

/// A loss of the classification score. `deriv` returns `None` where the loss
/// is not treated as differentiable.
pub trait ScalarLoss {
    fn value(&self, r: f64) -> f64;
    fn deriv(&self, r: f64) -> Option<f64>;
}

impl ScalarLoss for LossSpec {
    fn value(&self, r: f64) -> f64 {
        match self.kind {
            LossKind::Ramp => ramp(r),
            LossKind::SmoothedRamp => smoothed_ramp(r, self.sigma),
            LossKind::SmoothedHinge => smoothed_hinge(r, self.sigma),
        }
    }

    fn deriv(&self, r: f64) -> Option<f64> {
        match self.kind {
            LossKind::Ramp => None,
            LossKind::SmoothedRamp => Some(smoothed_ramp_deriv(r, self.sigma)),
            LossKind::SmoothedHinge => Some(smoothed_hinge_deriv(r, self.sigma)),
        }
    }
}

/// Ramp loss: 1 on `r <= 0`, `1 - r` on `(0, 1)`, 0 on `r >= 1`.
pub fn ramp(r: f64) -> f64 {
    if r <= 0.0 {
        1.0
    } else if r < 1.0 {
        1.0 - r
    } else {
        0.0
    }
}

/// `log(1 + exp(z))` without overflow.
pub fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// `1 / (1 + exp(-z))` without overflow.
pub fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Softmax-smoothed ramp loss.
pub fn smoothed_ramp(r: f64, sigma: f64) -> f64 {
    // Each softmax is max + sigma*log1p(exp(-gap/sigma)); the two maxima
    // recombine into the exact ramp.
    let upper = sigma * (-(1.0 - r).abs() / sigma).exp().ln_1p();
    let lower = sigma * (-r.abs() / sigma).exp().ln_1p();
    ramp(r) + (upper - lower)
}

/// Derivative of [`smoothed_ramp`]:
/// `logistic((r-1)/sigma) - logistic(r/sigma)`, always negative.
pub fn smoothed_ramp_deriv(r: f64, sigma: f64) -> f64 {
    // Use the pair of logistic tails that are small at r so the difference
    // does not cancel to zero.
    if r >= 0.5 {
        logistic(-r / sigma) - logistic((1.0 - r) / sigma)
    } else {
        logistic((r - 1.0) / sigma) - logistic(r / sigma)
    }
}

/// `sigma * log(1 + exp((1-r)/sigma))`, the softmax-smoothed hinge.
pub fn smoothed_hinge(r: f64, sigma: f64) -> f64 {
    sigma * softplus((1.0 - r) / sigma)
}

pub fn smoothed_hinge_deriv(r: f64, sigma: f64) -> f64 {
    -logistic((1.0 - r) / sigma)
}
