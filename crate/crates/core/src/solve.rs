//! First-order minimization of smooth (possibly nonconvex) objectives:
//! Polak-Ribiere+ nonlinear conjugate gradient and L-BFGS, both driven by a
//! bracketing/bisection line search for the weak Wolfe conditions, plus a
//! multi-start driver that groups the resulting minimizers.

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{rng_for, streams};
use crate::error::{Error, Result};
use crate::geometry::{dot, norm, sin_angle};

/// A differentiable function of `dim()` variables.
pub trait Objective: Sync {
    fn dim(&self) -> usize;
    /// Returns the value and writes the gradient into `grad`.
    fn value_grad(&self, x: &[f64], grad: &mut [f64]) -> Result<f64>;
}

/// Adapts a closure `(x, grad) -> value` into an [`Objective`].
pub struct FnObjective<F> {
    dim: usize,
    f: F,
}

impl<F> FnObjective<F>
where
    F: Fn(&[f64], &mut [f64]) -> f64 + Sync,
{
    pub fn new(dim: usize, f: F) -> Self {
        FnObjective { dim, f }
    }
}

impl<F> Objective for FnObjective<F>
where
    F: Fn(&[f64], &mut [f64]) -> f64 + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn value_grad(&self, x: &[f64], grad: &mut [f64]) -> Result<f64> {
        Ok((self.f)(x, grad))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "name")]
pub enum Method {
    CgPrPlus,
    Lbfgs { memory: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub method: Method,
    /// Stop once `||grad|| <= grad_tol * max(1, |f|)`.
    pub grad_tol: f64,
    pub max_iters: usize,
    pub wolfe_c1: f64,
    pub wolfe_c2: f64,
    pub max_linesearch: usize,
    /// Seeds the multi-start points.
    pub seed: u64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            method: Method::CgPrPlus,
            grad_tol: 1e-8,
            max_iters: 10_000,
            wolfe_c1: 1e-4,
            wolfe_c2: 0.9,
            max_linesearch: 60,
            seed: 0,
        }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.wolfe_c1 && self.wolfe_c1 < self.wolfe_c2 && self.wolfe_c2 < 1.0) {
            return Err(Error::invalid(
                "wolfe constants",
                format!(
                    "need 0 < c1 < c2 < 1, got c1 = {}, c2 = {}",
                    self.wolfe_c1, self.wolfe_c2
                ),
            ));
        }
        if !(self.grad_tol > 0.0) {
            return Err(Error::invalid("grad_tol", "must be positive"));
        }
        if self.max_iters == 0 || self.max_linesearch == 0 {
            return Err(Error::invalid("iteration limits", "must be positive"));
        }
        if let Method::Lbfgs { memory: 0 } = self.method {
            return Err(Error::invalid("memory", "L-BFGS memory must be positive"));
        }
        Ok(())
    }
}

/// Relative slack allowed in the sufficient-decrease test, absorbing
/// rounding in `f` once the achievable decrease reaches machine precision.
pub const DECREASE_SLACK: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq)]
pub struct LineSearchResult {
    pub step: f64,
    pub value: f64,
    pub grad: Vec<f64>,
    pub evaluations: usize,
    /// Both Wolfe conditions hold at `step`. When false, `step` is the
    /// largest trial that satisfied sufficient decrease, or zero.
    pub satisfied: bool,
}

fn axpy(x: &[f64], alpha: f64, p: &[f64]) -> Vec<f64> {
    x.iter().zip(p).map(|(xi, pi)| xi + alpha * pi).collect()
}

/// Weak Wolfe line search by bracketing and bisection.
///
/// Doubles the trial step while the curvature condition fails and halves the
/// bracket once sufficient decrease fails. A trial at which the objective
/// cannot be evaluated shrinks the bracket like a failed decrease test.
#[allow(clippy::too_many_arguments)]
pub fn line_search_weak_wolfe<O: Objective + ?Sized>(
    obj: &O,
    x: &[f64],
    value: f64,
    grad: &[f64],
    direction: &[f64],
    initial_step: f64,
    opts: &SolveOptions,
) -> Result<LineSearchResult> {
    let slope = dot(grad, direction);
    if !(slope < 0.0) {
        return Err(Error::invalid(
            "direction",
            format!("not a descent direction (slope {slope})"),
        ));
    }
    let slack = DECREASE_SLACK * value.abs().max(1.0);
    let mut lo = 0.0;
    let mut hi = f64::INFINITY;
    let mut step = if initial_step > 0.0 && initial_step.is_finite() {
        initial_step
    } else {
        1.0
    };
    let mut best: Option<(f64, f64, Vec<f64>)> = None;
    let mut trial_grad = vec![0.0; x.len()];
    for k in 1..=opts.max_linesearch {
        let trial = axpy(x, step, direction);
        match obj.value_grad(&trial, &mut trial_grad) {
            Ok(f) if f.is_finite() && trial_grad.iter().all(|g| g.is_finite()) => {
                if f > value + opts.wolfe_c1 * step * slope + slack {
                    hi = step;
                } else if dot(&trial_grad, direction) < opts.wolfe_c2 * slope {
                    lo = step;
                    best = Some((step, f, trial_grad.clone()));
                } else {
                    return Ok(LineSearchResult {
                        step,
                        value: f,
                        grad: trial_grad,
                        evaluations: k,
                        satisfied: true,
                    });
                }
            }
            Ok(_) | Err(Error::NonFinite { .. }) => hi = step,
            Err(e) => return Err(e),
        }
        step = if hi.is_finite() { 0.5 * (lo + hi) } else { 2.0 * step };
    }
    Ok(match best {
        Some((step, value, grad)) => LineSearchResult {
            step,
            value,
            grad,
            evaluations: opts.max_linesearch,
            satisfied: false,
        },
        None => LineSearchResult {
            step: 0.0,
            value,
            grad: grad.to_vec(),
            evaluations: opts.max_linesearch,
            satisfied: false,
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    GradientTolerance,
    MaxIterations,
    LineSearchFailure,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub iteration: usize,
    pub value: f64,
    pub grad_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub minimizer: Vec<f64>,
    pub value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub termination: Termination,
    pub evaluations: usize,
    /// Iterations whose line search stopped short of the Wolfe conditions.
    pub linesearch_failures: usize,
    /// CG restarts along steepest descent (always zero for L-BFGS).
    pub restarts: usize,
    pub trace: Vec<TracePoint>,
}

/// One accepted step, as seen by [`minimize_observed`].
#[derive(Debug, Clone)]
pub struct StepInfo<'a> {
    pub iteration: usize,
    pub x: &'a [f64],
    pub value: f64,
    pub grad: &'a [f64],
    pub direction: &'a [f64],
    pub step: f64,
    pub new_value: f64,
    pub new_grad: &'a [f64],
    pub wolfe_satisfied: bool,
}

pub fn minimize<O: Objective + ?Sized>(obj: &O, x0: &[f64], opts: &SolveOptions) -> Result<SolveReport> {
    minimize_observed(obj, x0, opts, |_| {})
}

struct LbfgsMemory {
    capacity: usize,
    pairs: std::collections::VecDeque<(Vec<f64>, Vec<f64>, f64)>,
}

impl LbfgsMemory {
    fn push(&mut self, s: Vec<f64>, y: Vec<f64>) {
        let sy = dot(&s, &y);
        if !(sy > 1e-300) {
            return;
        }
        if self.pairs.len() == self.capacity {
            self.pairs.pop_front();
        }
        self.pairs.push_back((s, y, 1.0 / sy));
    }

    /// Two-loop recursion: returns `-H grad`.
    fn direction(&self, grad: &[f64]) -> Vec<f64> {
        let mut q = grad.to_vec();
        let mut alphas = Vec::with_capacity(self.pairs.len());
        for (s, y, rho) in self.pairs.iter().rev() {
            let a = rho * dot(s, &q);
            for (qi, yi) in q.iter_mut().zip(y) {
                *qi -= a * yi;
            }
            alphas.push(a);
        }
        if let Some((s, y, _)) = self.pairs.back() {
            let gamma = dot(s, y) / dot(y, y);
            q.iter_mut().for_each(|v| *v *= gamma);
        }
        for ((s, y, rho), a) in self.pairs.iter().zip(alphas.into_iter().rev()) {
            let b = rho * dot(y, &q);
            for (qi, si) in q.iter_mut().zip(s) {
                *qi += (a - b) * si;
            }
        }
        q.iter_mut().for_each(|v| *v = -*v);
        q
    }
}

/// [`minimize`] with a callback invoked after every accepted step.
pub fn minimize_observed<O, F>(obj: &O, x0: &[f64], opts: &SolveOptions, mut observe: F) -> Result<SolveReport>
where
    O: Objective + ?Sized,
    F: FnMut(&StepInfo),
{
    opts.validate()?;
    if x0.len() != obj.dim() {
        return Err(Error::invalid(
            "start point",
            format!("has {} entries, objective expects {}", x0.len(), obj.dim()),
        ));
    }
    let mut x = x0.to_vec();
    let mut grad = vec![0.0; x.len()];
    let mut value = obj.value_grad(&x, &mut grad)?;
    if !value.is_finite() || grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFinite {
            what: "objective at the start point".into(),
        });
    }
    let mut evaluations = 1;
    let mut gnorm = norm(&grad);
    let mut trace = vec![TracePoint {
        iteration: 0,
        value,
        grad_norm: gnorm,
    }];
    let mut memory = match opts.method {
        Method::Lbfgs { memory } => Some(LbfgsMemory {
            capacity: memory,
            pairs: Default::default(),
        }),
        Method::CgPrPlus => None,
    };
    let mut direction: Vec<f64> = grad.iter().map(|g| -g).collect();
    let mut prev_step = 0.0;
    let mut prev_slope = 0.0;
    let mut restarts = 0;
    let mut linesearch_failures = 0;
    let mut iterations = 0;

    let termination = loop {
        if gnorm <= opts.grad_tol * value.abs().max(1.0) {
            break Termination::GradientTolerance;
        }
        if iterations >= opts.max_iters {
            break Termination::MaxIterations;
        }
        let mut slope = dot(&grad, &direction);
        if !(slope < 0.0) {
            direction = grad.iter().map(|g| -g).collect();
            slope = -gnorm * gnorm;
            restarts += 1;
        }
        let initial_step = if iterations == 0 {
            (1.0 / gnorm).min(1.0)
        } else if memory.is_some() {
            1.0
        } else {
            (prev_step * prev_slope / slope).min(1e10)
        };
        let ls = line_search_weak_wolfe(obj, &x, value, &grad, &direction, initial_step, opts)?;
        evaluations += ls.evaluations;
        if !ls.satisfied {
            linesearch_failures += 1;
        }
        if ls.step == 0.0 {
            break Termination::LineSearchFailure;
        }
        iterations += 1;
        let new_x = axpy(&x, ls.step, &direction);
        observe(&StepInfo {
            iteration: iterations,
            x: &x,
            value,
            grad: &grad,
            direction: &direction,
            step: ls.step,
            new_value: ls.value,
            new_grad: &ls.grad,
            wolfe_satisfied: ls.satisfied,
        });

        let next_direction = match memory.as_mut() {
            Some(mem) => {
                let s: Vec<f64> = new_x.iter().zip(&x).map(|(a, b)| a - b).collect();
                let y: Vec<f64> = ls.grad.iter().zip(&grad).map(|(a, b)| a - b).collect();
                mem.push(s, y);
                mem.direction(&ls.grad)
            }
            None => {
                // PR+: beta = max(0, g+ . (g+ - g) / |g|^2)
                let beta = ls.grad.iter().zip(&grad).map(|(gn, go)| gn * (gn - go)).sum::<f64>() / (gnorm * gnorm);
                if beta <= 0.0 {
                    restarts += 1;
                    ls.grad.iter().map(|g| -g).collect()
                } else {
                    ls.grad.iter().zip(&direction).map(|(g, p)| -g + beta * p).collect()
                }
            }
        };
        prev_step = ls.step;
        prev_slope = slope;
        x = new_x;
        value = ls.value;
        grad = ls.grad;
        gnorm = norm(&grad);
        direction = next_direction;
        trace.push(TracePoint {
            iteration: iterations,
            value,
            grad_norm: gnorm,
        });
        if !ls.satisfied {
            break Termination::LineSearchFailure;
        }
    };

    let converged = termination == Termination::GradientTolerance;
    Ok(SolveReport {
        minimizer: x,
        value,
        grad_norm: gnorm,
        iterations,
        converged,
        termination,
        evaluations,
        linesearch_failures,
        restarts,
        trace,
    })
}

/// Thresholds deciding when two multi-start runs found the same minimizer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterTolerances {
    pub sin_angle: f64,
    pub intercept: f64,
    pub value: f64,
}

impl Default for ClusterTolerances {
    fn default() -> Self {
        ClusterTolerances {
            sin_angle: 1e-2,
            intercept: 1e-2,
            value: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    /// Stacked `(w, b)` of the first member.
    pub representative: Vec<f64>,
    pub value: f64,
    pub members: Vec<usize>,
    /// Angle between the `w` part and the reference direction; `None`
    /// without a reference or when `w = 0`.
    pub sin_angle_to_reference: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailedRun {
    pub run: usize,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiStartReport {
    pub starts: Vec<Vec<f64>>,
    /// One entry per start; `None` for runs that aborted.
    pub runs: Vec<Option<SolveReport>>,
    pub failed: Vec<FailedRun>,
    /// Sorted by objective value, best first.
    pub clusters: Vec<Cluster>,
}

impl MultiStartReport {
    pub fn best(&self) -> Option<&Cluster> {
        self.clusters.first()
    }
}

/// `n` points uniform on the unit sphere in `dim` dimensions.
pub fn sphere_starts(n: usize, dim: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = rng_for(seed, streams::STARTS);
    (0..n)
        .map(|_| loop {
            let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
            let r = norm(&v);
            if r > 1e-12 {
                break v.into_iter().map(|c| c / r).collect();
            }
        })
        .collect()
}

fn same_minimizer(a: &[f64], fa: f64, b: &[f64], fb: f64, tol: &ClusterTolerances) -> bool {
    let (wa, ba) = a.split_at(a.len() - 1);
    let (wb, bb) = b.split_at(b.len() - 1);
    let angle_ok = match sin_angle(wa, wb) {
        Ok(s) => s <= tol.sin_angle,
        // both zero: compare intercepts only
        Err(_) => norm(wa) == norm(wb),
    };
    let (ba, bb) = (ba[0], bb[0]);
    let intercept_ok = (ba - bb).abs() / (1.0 + ba.abs().max(bb.abs())) <= tol.intercept;
    let value_ok = (fa - fb).abs() <= tol.value * fa.abs().max(fb.abs()).max(1.0);
    angle_ok && intercept_ok && value_ok
}

/// Groups runs greedily in start order: a run joins the first cluster whose
/// representative it matches, otherwise it founds a new cluster.
pub fn cluster_runs(runs: &[Option<SolveReport>], tol: &ClusterTolerances, reference: Option<&[f64]>) -> Vec<Cluster> {
    let mut clusters: Vec<Cluster> = Vec::new();
    for (i, run) in runs.iter().enumerate() {
        let Some(run) = run else { continue };
        match clusters
            .iter_mut()
            .find(|c| same_minimizer(&c.representative, c.value, &run.minimizer, run.value, tol))
        {
            Some(c) => c.members.push(i),
            None => {
                let w = &run.minimizer[..run.minimizer.len() - 1];
                clusters.push(Cluster {
                    representative: run.minimizer.clone(),
                    value: run.value,
                    members: vec![i],
                    sin_angle_to_reference: reference.and_then(|r| sin_angle(w, r).ok()),
                });
            }
        }
    }
    clusters.sort_by(|a, b| a.value.total_cmp(&b.value).then(a.members[0].cmp(&b.members[0])));
    clusters
}

/// Minimizes from `n_starts` random points on the unit sphere and clusters
/// the results. The last coordinate of the objective's domain is treated as
/// the intercept. Runs execute in parallel; the report is ordered by start
/// index and is identical for any thread count.
pub fn multistart<O: Objective + ?Sized>(
    obj: &O,
    n_starts: usize,
    opts: &SolveOptions,
    reference: Option<&[f64]>,
) -> Result<MultiStartReport> {
    if n_starts == 0 {
        return Err(Error::invalid("starts", "must be at least 1"));
    }
    opts.validate()?;
    let starts = sphere_starts(n_starts, obj.dim(), opts.seed);
    let results: Vec<Result<SolveReport>> = starts.par_iter().map(|x0| minimize(obj, x0, opts)).collect();
    let mut runs = Vec::with_capacity(n_starts);
    let mut failed = Vec::new();
    for (run, result) in results.into_iter().enumerate() {
        match result {
            Ok(report) => runs.push(Some(report)),
            Err(e) => {
                failed.push(FailedRun {
                    run,
                    error: e.to_string(),
                });
                runs.push(None);
            }
        }
    }
    let clusters = cluster_runs(&runs, &ClusterTolerances::default(), reference);
    Ok(MultiStartReport {
        starts,
        runs,
        failed,
        clusters,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn half_square() -> FnObjective<impl Fn(&[f64], &mut [f64]) -> f64 + Sync> {
        FnObjective::new(1, |x: &[f64], g: &mut [f64]| {
            g[0] = x[0];
            0.5 * x[0] * x[0]
        })
    }

    /// f(x) = 1/2 x'Ax - c'x with A diagonal-dominant SPD.
    fn quadratic() -> (FnObjective<impl Fn(&[f64], &mut [f64]) -> f64 + Sync>, Vec<f64>) {
        const A: [[f64; 5]; 5] = [
            [4.0, 1.0, 0.0, 0.0, 0.5],
            [1.0, 3.0, 0.5, 0.0, 0.0],
            [0.0, 0.5, 5.0, 1.0, 0.0],
            [0.0, 0.0, 1.0, 2.0, 0.3],
            [0.5, 0.0, 0.0, 0.3, 6.0],
        ];
        const C: [f64; 5] = [1.0, -2.0, 0.5, 3.0, -1.0];
        let obj = FnObjective::new(5, |x: &[f64], g: &mut [f64]| {
            let mut f = 0.0;
            for i in 0..5 {
                let ax: f64 = (0..5).map(|j| A[i][j] * x[j]).sum();
                g[i] = ax - C[i];
                f += 0.5 * x[i] * ax - C[i] * x[i];
            }
            f
        });
        // Solve A x = C by Gauss-Seidel to full precision.
        let mut sol = [0.0; 5];
        for _ in 0..500 {
            for i in 0..5 {
                let s: f64 = (0..5).filter(|&j| j != i).map(|j| A[i][j] * sol[j]).sum();
                sol[i] = (C[i] - s) / A[i][i];
            }
        }
        (obj, sol.to_vec())
    }

    #[test]
    fn unit_step_is_wolfe_on_half_square() {
        let obj = half_square();
        let opts = SolveOptions::default();
        let ls = line_search_weak_wolfe(&obj, &[1.0], 0.5, &[1.0], &[-1.0], 1.0, &opts).unwrap();
        assert!(ls.satisfied);
        assert_eq!(ls.step, 1.0);
        assert_eq!(ls.evaluations, 1);
        // a far-too-long initial step is bisected back into the interval
        let ls = line_search_weak_wolfe(&obj, &[1.0], 0.5, &[1.0], &[-1.0], 64.0, &opts).unwrap();
        assert!(ls.satisfied);
        assert!(ls.step > 0.0 && ls.step < 2.0 - 2e-4);
    }

    #[test]
    fn ascent_direction_rejected() {
        let obj = half_square();
        let opts = SolveOptions::default();
        assert!(line_search_weak_wolfe(&obj, &[1.0], 0.5, &[1.0], &[1.0], 1.0, &opts).is_err());
        assert!(line_search_weak_wolfe(&obj, &[1.0], 0.5, &[1.0], &[0.0], 1.0, &opts).is_err());
    }

    #[test]
    fn exhausted_line_search_reports_failure() {
        let obj = half_square();
        let opts = SolveOptions {
            max_linesearch: 2,
            ..Default::default()
        };
        let ls = line_search_weak_wolfe(&obj, &[1.0], 0.5, &[1.0], &[-1.0], 1e-9, &opts).unwrap();
        assert!(!ls.satisfied);
        assert!(ls.step > 0.0);
    }

    #[test]
    fn cg_solves_quadratic() {
        let (obj, sol) = quadratic();
        let r = minimize(&obj, &[0.0; 5], &SolveOptions::default()).unwrap();
        assert!(r.converged);
        assert!(r.iterations <= 50, "{}", r.iterations);
        for (a, b) in r.minimizer.iter().zip(&sol) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn lbfgs_and_cg_agree() {
        let (obj, _) = quadratic();
        let cg = minimize(&obj, &[1.0; 5], &SolveOptions::default()).unwrap();
        let lb = minimize(
            &obj,
            &[1.0; 5],
            &SolveOptions {
                method: Method::Lbfgs { memory: 10 },
                ..Default::default()
            },
        )
        .unwrap();
        assert!(lb.converged);
        assert!((cg.value - lb.value).abs() < 1e-6);
    }

    #[test]
    fn trace_is_monotone() {
        let (obj, _) = quadratic();
        let r = minimize(&obj, &[3.0, -2.0, 1.0, 0.0, 5.0], &SolveOptions::default()).unwrap();
        for pair in r.trace.windows(2) {
            assert!(pair[1].value <= pair[0].value + DECREASE_SLACK * pair[0].value.abs().max(1.0));
        }
        assert_eq!(r.trace.len(), r.iterations + 1);
    }

    #[test]
    fn non_finite_start_aborts() {
        let obj = FnObjective::new(1, |_x: &[f64], g: &mut [f64]| {
            g[0] = 1.0;
            f64::NAN
        });
        let err = minimize(&obj, &[0.0], &SolveOptions::default()).unwrap_err();
        assert!(matches!(err, Error::NonFinite { .. }));
    }

    #[test]
    fn invalid_options() {
        let (obj, _) = quadratic();
        let bad = SolveOptions {
            wolfe_c1: 0.5,
            wolfe_c2: 0.4,
            ..Default::default()
        };
        assert!(minimize(&obj, &[0.0; 5], &bad).is_err());
        assert!(minimize(&obj, &[0.0; 4], &SolveOptions::default()).is_err());
    }

    #[test]
    fn sphere_starts_are_unit_and_seeded() {
        let a = sphere_starts(5, 4, 1);
        for v in &a {
            assert!((norm(v) - 1.0).abs() < 1e-14);
        }
        assert_eq!(a, sphere_starts(5, 4, 1));
        assert_ne!(a, sphere_starts(5, 4, 2));
    }

    #[test]
    fn convex_multistart_has_one_cluster() {
        let (obj, _) = quadratic();
        let report = multistart(&obj, 8, &SolveOptions::default(), None).unwrap();
        assert_eq!(report.clusters.len(), 1);
        assert_eq!(report.clusters[0].members, (0..8).collect::<Vec<_>>());
        assert!(report.failed.is_empty());
    }

    #[test]
    fn clustering_separates_distinct_minimizers() {
        let run = |x: Vec<f64>, value: f64| {
            Some(SolveReport {
                minimizer: x,
                value,
                grad_norm: 0.0,
                iterations: 1,
                converged: true,
                termination: Termination::GradientTolerance,
                evaluations: 1,
                linesearch_failures: 0,
                restarts: 0,
                trace: vec![],
            })
        };
        let runs = vec![
            run(vec![1.0, 0.0, 0.1], 0.5),
            run(vec![0.0, 1.0, 0.1], 0.5),
            run(vec![2.0, 0.001, 0.1], 0.5),
            None,
            run(vec![1.0, 0.0, 0.1], 0.4),
        ];
        let clusters = cluster_runs(&runs, &ClusterTolerances::default(), Some(&[1.0, 0.0]));
        assert_eq!(clusters.len(), 3);
        assert_eq!(clusters[0].members, vec![4]);
        assert_eq!(clusters[1].members, vec![0, 2]);
        assert_eq!(clusters[1].sin_angle_to_reference, Some(0.0));
        assert_eq!(clusters[2].sin_angle_to_reference, Some(1.0));
    }
}
