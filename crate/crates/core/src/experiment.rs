//! Synthetic benchmark protocols: separable data of growing size, a sweep
//! over the regularization weight, label flipping, and adversarial
//! injection. Each driver returns table rows plus trend checks; exact
//! numbers depend on the random streams, so only the trends are checked.

use serde::{Deserialize, Serialize};

use crate::data::{adversarial_indices, flip_labels, generate_separable, inject_adversarial, Dataset};
use crate::error::{Error, Result};
use crate::geometry::{distance, is_misclassified, Hyperplane};
use crate::loss::LossSpec;
use crate::objective::{imputed_epsilon, EmpiricalObjective, ObjectiveSpec};
use crate::solve::{multistart, SolveOptions};

pub const TABLE1_SIZES: [usize; 6] = [100, 300, 1000, 3000, 10_000, 30_000];
pub const TABLE2_WEIGHTS: [f64; 5] = [0.001, 0.01, 0.1, 1.0, 10.0];
pub const TABLE3_FRACTIONS: [f64; 4] = [0.1, 0.2, 0.3, 0.4];
pub const TABLE4_FRACTIONS: [f64; 3] = [0.1, 0.2, 0.3];
pub const SWEEP_SIZE: usize = 10_000;
pub const TABLE3_DATASETS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Table {
    T1,
    T2,
    T3,
    T4,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub seed: u64,
    /// In `(0, 1]`; shrinks sample sizes, start counts and dataset counts.
    pub scale: f64,
    pub sigma: f64,
    /// Regularization weight for every table except the sweep.
    pub epsilon_bar: f64,
    pub d: usize,
    pub starts: usize,
    /// Starts for the convex smoothed-hinge fits.
    pub hinge_starts: usize,
    pub solve: SolveOptions,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 1,
            scale: 1.0,
            sigma: 0.02,
            epsilon_bar: 0.1,
            d: 10,
            starts: 20,
            hinge_starts: 20,
            solve: SolveOptions::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.scale > 0.0 && self.scale <= 1.0) {
            return Err(Error::invalid(
                "scale",
                format!("must lie in (0, 1], got {}", self.scale),
            ));
        }
        LossSpec::smoothed_ramp(self.sigma)?;
        if !(self.epsilon_bar >= 0.0 && self.epsilon_bar.is_finite()) {
            return Err(Error::invalid("epsilon_bar", "must be finite and nonnegative"));
        }
        if self.d == 0 {
            return Err(Error::invalid("d", "must be positive"));
        }
        if self.starts == 0 || self.hinge_starts == 0 {
            return Err(Error::invalid("starts", "must be positive"));
        }
        self.solve.validate()
    }

    fn scaled(&self, count: usize, floor: usize) -> usize {
        ((count as f64 * self.scale).round() as usize).max(floor).min(count)
    }

    pub fn scaled_n(&self, n: usize) -> usize {
        self.scaled(n, 20)
    }

    pub fn scaled_starts(&self) -> usize {
        self.scaled(self.starts, 2)
    }

    pub fn scaled_hinge_starts(&self) -> usize {
        self.scaled(self.hinge_starts, 1)
    }

    /// Seed for repetition `rep` of the row keyed by `key` (the sample size
    /// or the corruption percentage), independent of which rows are run.
    pub fn row_seed(&self, key: u64, rep: usize) -> u64 {
        self.seed.wrapping_add(1000 * key + rep as u64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitCluster {
    pub hyperplane: Hyperplane,
    pub value: f64,
    pub members: usize,
    /// Angle to `e_1`; NaN when `w = 0`.
    pub sin_theta: f64,
}

/// Outcome of a multi-start fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fit {
    /// Sorted by objective value, lowest first.
    pub clusters: Vec<FitCluster>,
    pub failed_runs: usize,
    pub unconverged_runs: usize,
}

impl Fit {
    /// Lowest objective value.
    pub fn best(&self) -> &FitCluster {
        &self.clusters[0]
    }

    /// Reached from the most starts; ties go to the lower value.
    pub fn dominant(&self) -> &FitCluster {
        self.clusters
            .iter()
            .rev()
            .max_by_key(|c| c.members)
            .expect("a fit has at least one cluster")
    }

    pub fn sin_thetas(&self) -> Vec<f64> {
        self.clusters.iter().map(|c| c.sin_theta).collect()
    }
}

/// Fits the squared-norm objective from `starts` random points.
pub fn fit(ds: &Dataset, loss: LossSpec, epsilon_bar: f64, starts: usize, opts: &SolveOptions) -> Result<Fit> {
    let spec = ObjectiveSpec::squared(loss, epsilon_bar)?;
    let obj = EmpiricalObjective::new(spec, ds)?;
    let reference = Hyperplane::canonical(ds.dim()).w;
    let report = multistart(&obj, starts, opts, Some(&reference))?;
    if report.clusters.is_empty() {
        return Err(Error::NonFinite {
            what: format!("every one of the {starts} runs"),
        });
    }
    Ok(Fit {
        clusters: report
            .clusters
            .iter()
            .map(|c| FitCluster {
                hyperplane: Hyperplane::from_stacked(&c.representative),
                value: c.value,
                members: c.members.len(),
                sin_theta: c.sin_angle_to_reference.unwrap_or(f64::NAN),
            })
            .collect(),
        failed_runs: report.failed.len(),
        unconverged_runs: report.runs.iter().flatten().filter(|r| !r.converged).count(),
    })
}

fn percent_key(fraction: f64) -> u64 {
    (100.0 * fraction).round() as u64
}

fn join(values: &[f64]) -> String {
    values.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>().join(";")
}

fn misclassified(ds: &Dataset, h: &Hyperplane, rows: impl Iterator<Item = usize>) -> usize {
    rows.filter(|&i| {
        let x = ds.point(i);
        is_misclassified(distance(h, x, ds.label(i)), x)
    })
    .count()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl TrendCheck {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        TrendCheck {
            name: name.to_string(),
            passed,
            detail,
        }
    }
}

/// Number of adjacent pairs violating `ok(prev, next)`.
pub fn inversions(values: &[f64], ok: impl Fn(f64, f64) -> bool) -> usize {
    values.windows(2).filter(|p| !ok(p[0], p[1])).count()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1Row {
    pub n: usize,
    pub seed: u64,
    pub starts: usize,
    pub solutions: usize,
    pub sin_theta_best: f64,
    pub sin_theta_all: String,
    pub objective: f64,
    pub unconverged_runs: usize,
    pub failed_runs: usize,
}

pub fn table1_rows(cfg: &ExperimentConfig, sizes: &[usize]) -> Result<Vec<Table1Row>> {
    cfg.validate()?;
    let loss = LossSpec::smoothed_ramp(cfg.sigma)?;
    let opts_for = |seed| SolveOptions { seed, ..cfg.solve };
    sizes
        .iter()
        .map(|&n| {
            let seed = cfg.row_seed(n as u64, 0);
            let n = cfg.scaled_n(n);
            let ds = generate_separable(n, cfg.d, seed)?;
            let f = fit(&ds, loss, cfg.epsilon_bar, cfg.scaled_starts(), &opts_for(seed))?;
            Ok(Table1Row {
                n,
                seed,
                starts: cfg.scaled_starts(),
                solutions: f.clusters.len(),
                sin_theta_best: f.best().sin_theta,
                sin_theta_all: join(&f.sin_thetas()),
                objective: f.best().value,
                unconverged_runs: f.unconverged_runs,
                failed_runs: f.failed_runs,
            })
        })
        .collect()
}

pub fn table1_checks(rows: &[Table1Row]) -> Vec<TrendCheck> {
    let (Some(first), Some(last)) = (rows.first(), rows.last()) else {
        return vec![];
    };
    let mut checks = vec![
        TrendCheck::new(
            "sin_theta_decreases_with_n",
            last.sin_theta_best < first.sin_theta_best,
            format!(
                "n={}: {:.4}, n={}: {:.4}",
                first.n, first.sin_theta_best, last.n, last.sin_theta_best
            ),
        ),
        TrendCheck::new(
            "solutions_nonincreasing_with_n",
            last.solutions <= first.solutions,
            format!("n={}: {}, n={}: {}", first.n, first.solutions, last.n, last.solutions),
        ),
    ];
    if let Some(r) = rows.iter().find(|r| r.n == SWEEP_SIZE) {
        checks.push(TrendCheck::new(
            "sin_theta_at_10000_below_0.1",
            r.sin_theta_best <= 0.1,
            format!("{:.4}", r.sin_theta_best),
        ));
    }
    checks
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table2Row {
    pub epsilon_bar: f64,
    pub n: usize,
    pub seed: u64,
    pub solutions: usize,
    pub w_norm: f64,
    pub imputed_epsilon: f64,
    pub sin_theta: f64,
    pub objective: f64,
    pub unconverged_runs: usize,
    pub failed_runs: usize,
}

/// One dataset shared by every row of the sweep.
pub fn table2_rows(cfg: &ExperimentConfig, weights: &[f64]) -> Result<Vec<Table2Row>> {
    cfg.validate()?;
    let loss = LossSpec::smoothed_ramp(cfg.sigma)?;
    let seed = cfg.row_seed(0, 0);
    let n = cfg.scaled_n(SWEEP_SIZE);
    let ds = generate_separable(n, cfg.d, seed)?;
    let opts = SolveOptions { seed, ..cfg.solve };
    weights
        .iter()
        .map(|&eps_bar| {
            let f = fit(&ds, loss, eps_bar, cfg.scaled_starts(), &opts)?;
            Ok(Table2Row {
                epsilon_bar: eps_bar,
                n,
                seed,
                solutions: f.clusters.len(),
                w_norm: f.best().hyperplane.norm(),
                imputed_epsilon: imputed_epsilon(eps_bar, &f.best().hyperplane)?,
                sin_theta: f.best().sin_theta,
                objective: f.best().value,
                unconverged_runs: f.unconverged_runs,
                failed_runs: f.failed_runs,
            })
        })
        .collect()
}

/// Each check tolerates one adjacent inversion.
pub fn table2_checks(rows: &[Table2Row]) -> Vec<TrendCheck> {
    let imputed: Vec<f64> = rows.iter().map(|r| r.imputed_epsilon).collect();
    let norms: Vec<f64> = rows.iter().map(|r| r.w_norm).collect();
    let sines: Vec<f64> = rows
        .iter()
        .filter(|r| r.epsilon_bar >= 0.01)
        .map(|r| r.sin_theta)
        .collect();
    let (a, b, c) = (
        inversions(&imputed, |x, y| y > x),
        inversions(&norms, |x, y| y < x),
        inversions(&sines, |x, y| y >= x),
    );
    vec![
        TrendCheck::new("imputed_epsilon_increasing", a <= 1, format!("{a} inversions")),
        TrendCheck::new("w_norm_decreasing", b <= 1, format!("{b} inversions")),
        TrendCheck::new("sin_theta_nondecreasing_from_0.01", c <= 1, format!("{c} inversions")),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table3Row {
    pub flip_percent: f64,
    pub n: usize,
    pub datasets: usize,
    pub first_seed: u64,
    pub avg_solutions: f64,
    pub avg_sin_theta: f64,
    pub avg_sin_theta_hinge: f64,
    /// Datasets whose most-reached ramp-loss cluster is not the lowest one.
    pub dominant_not_best: usize,
    pub unconverged_runs: usize,
    pub failed_runs: usize,
}

pub fn table3_rows(cfg: &ExperimentConfig, fractions: &[f64]) -> Result<Vec<Table3Row>> {
    cfg.validate()?;
    let ramp = LossSpec::smoothed_ramp(cfg.sigma)?;
    let hinge = LossSpec::smoothed_hinge(cfg.sigma)?;
    let n = cfg.scaled_n(SWEEP_SIZE);
    let datasets = cfg.scaled(TABLE3_DATASETS, 1);
    fractions
        .iter()
        .map(|&phi| {
            let key = percent_key(phi);
            let (mut sols, mut s_ramp, mut s_hinge) = (0.0, 0.0, 0.0);
            let (mut unconverged, mut failed, mut not_best) = (0, 0, 0);
            for rep in 0..datasets {
                let seed = cfg.row_seed(key, rep);
                let ds = flip_labels(&generate_separable(n, cfg.d, seed)?, phi, seed)?;
                let opts = SolveOptions { seed, ..cfg.solve };
                let r = fit(&ds, ramp, cfg.epsilon_bar, cfg.scaled_starts(), &opts)?;
                let h = fit(&ds, hinge, cfg.epsilon_bar, cfg.scaled_hinge_starts(), &opts)?;
                sols += r.clusters.len() as f64;
                s_ramp += r.dominant().sin_theta;
                s_hinge += h.dominant().sin_theta;
                not_best += usize::from(r.dominant() != r.best());
                unconverged += r.unconverged_runs + h.unconverged_runs;
                failed += r.failed_runs + h.failed_runs;
            }
            let k = datasets as f64;
            Ok(Table3Row {
                flip_percent: 100.0 * phi,
                n,
                datasets,
                first_seed: cfg.row_seed(key, 0),
                avg_solutions: sols / k,
                avg_sin_theta: s_ramp / k,
                avg_sin_theta_hinge: s_hinge / k,
                dominant_not_best: not_best,
                unconverged_runs: unconverged,
                failed_runs: failed,
            })
        })
        .collect()
}

pub fn table3_checks(rows: &[Table3Row]) -> Vec<TrendCheck> {
    rows.iter()
        .map(|r| {
            TrendCheck::new(
                &format!("ramp_closer_than_hinge_at_{}pct", r.flip_percent),
                r.avg_sin_theta < r.avg_sin_theta_hinge,
                format!("ramp {:.4}, hinge {:.4}", r.avg_sin_theta, r.avg_sin_theta_hinge),
            )
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table4Row {
    pub adv_percent: f64,
    pub n: usize,
    pub seed: u64,
    pub solutions: usize,
    /// Fraction of starts reaching the reported ramp-loss cluster.
    pub dominant_share: f64,
    pub dominant_is_best: bool,
    pub sin_theta: f64,
    pub intercept: f64,
    pub misclassified: usize,
    pub misclassified_clean: usize,
    pub sin_theta_hinge: f64,
    pub intercept_hinge: f64,
    pub misclassified_hinge: usize,
    pub misclassified_clean_hinge: usize,
    pub unconverged_runs: usize,
    pub failed_runs: usize,
}

pub fn table4_rows(cfg: &ExperimentConfig, fractions: &[f64]) -> Result<Vec<Table4Row>> {
    cfg.validate()?;
    let ramp = LossSpec::smoothed_ramp(cfg.sigma)?;
    let hinge = LossSpec::smoothed_hinge(cfg.sigma)?;
    let n = cfg.scaled_n(SWEEP_SIZE);
    fractions
        .iter()
        .map(|&phi| {
            let seed = cfg.row_seed(percent_key(phi), 0);
            let ds = inject_adversarial(&generate_separable(n, cfg.d, seed)?, phi, seed)?;
            let adversarial = adversarial_indices(n, phi, seed)?;
            let mut is_adv = vec![false; n];
            adversarial.iter().for_each(|&i| is_adv[i] = true);
            let opts = SolveOptions { seed, ..cfg.solve };
            let r = fit(&ds, ramp, cfg.epsilon_bar, cfg.scaled_starts(), &opts)?;
            let h = fit(&ds, hinge, cfg.epsilon_bar, cfg.scaled_hinge_starts(), &opts)?;
            let clean = || (0..n).filter(|&i| !is_adv[i]);
            let (rd, hd) = (r.dominant(), h.dominant());
            Ok(Table4Row {
                adv_percent: 100.0 * phi,
                n,
                seed,
                solutions: r.clusters.len(),
                dominant_share: rd.members as f64 / cfg.scaled_starts() as f64,
                dominant_is_best: rd == r.best(),
                sin_theta: rd.sin_theta,
                intercept: rd.hyperplane.b,
                misclassified: misclassified(&ds, &rd.hyperplane, 0..n),
                misclassified_clean: misclassified(&ds, &rd.hyperplane, clean()),
                sin_theta_hinge: hd.sin_theta,
                intercept_hinge: hd.hyperplane.b,
                misclassified_hinge: misclassified(&ds, &hd.hyperplane, 0..n),
                misclassified_clean_hinge: misclassified(&ds, &hd.hyperplane, clean()),
                unconverged_runs: r.unconverged_runs + h.unconverged_runs,
                failed_runs: r.failed_runs + h.failed_runs,
            })
        })
        .collect()
}

pub fn table4_checks(rows: &[Table4Row]) -> Vec<TrendCheck> {
    rows.iter()
        .flat_map(|r| {
            [
                TrendCheck::new(
                    &format!("hinge_intercept_larger_at_{}pct", r.adv_percent),
                    r.intercept_hinge.abs() > r.intercept.abs(),
                    format!(
                        "ramp |b| {:.4}, hinge |b| {:.4}",
                        r.intercept.abs(),
                        r.intercept_hinge.abs()
                    ),
                ),
                TrendCheck::new(
                    &format!("hinge_misclassifies_more_clean_points_at_{}pct", r.adv_percent),
                    r.misclassified_clean_hinge > r.misclassified_clean,
                    format!("ramp {}, hinge {}", r.misclassified_clean, r.misclassified_clean_hinge),
                ),
            ]
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        ExperimentConfig {
            scale: 0.05,
            d: 3,
            ..Default::default()
        }
    }

    #[test]
    fn scaling_floors() {
        let cfg = small();
        assert_eq!(cfg.scaled_n(10_000), 500);
        assert_eq!(cfg.scaled_n(100), 20);
        assert_eq!(cfg.scaled_starts(), 2);
        assert_eq!(ExperimentConfig::default().scaled_n(30_000), 30_000);
    }

    #[test]
    fn rejects_bad_scale() {
        let cfg = ExperimentConfig {
            scale: 1.5,
            ..Default::default()
        };
        assert!(table1_rows(&cfg, &[100]).is_err());
    }

    #[test]
    fn inversion_count() {
        assert_eq!(inversions(&[1.0, 2.0, 1.5, 3.0], |a, b| b > a), 1);
        assert_eq!(inversions(&[3.0, 2.0, 1.0], |a, b| b < a), 0);
    }

    #[test]
    fn imputed_column_matches_norm() {
        let rows = table2_rows(&small(), &[0.1, 1.0]).unwrap();
        for r in &rows {
            assert!((r.imputed_epsilon - r.epsilon_bar * r.w_norm).abs() < 1e-15);
        }
    }

    #[test]
    fn adversarial_rows_count_injected_points() {
        let rows = table4_rows(&small(), &[0.2]).unwrap();
        let r = &rows[0];
        assert!(r.misclassified >= r.misclassified_clean);
        assert!(r.misclassified - r.misclassified_clean <= 100);
    }
}
