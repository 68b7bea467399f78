use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use wdro_core::analytic::{
    closed_form_min_value, closed_form_minimizer, f_epsilon, origin_directional_derivatives, scan_stationary_points,
    OriginDerivatives, StationaryPoint, UniformModel,
};
use wdro_core::data::{generate_separable, load_csv};
use wdro_core::dro::{
    check_chance_cvar, cvar_distance, worst_case_prob_dual, worst_case_prob_knapsack, ChanceCvarCheck,
};
use wdro_core::experiment::{
    table1_checks, table1_rows, table2_checks, table2_rows, table3_checks, table3_rows, table4_checks, table4_rows,
    ExperimentConfig, TrendCheck, TABLE1_SIZES, TABLE2_WEIGHTS, TABLE3_FRACTIONS, TABLE4_FRACTIONS,
};
use wdro_core::geometry::margin_profile;
use wdro_core::objective::{imputed_epsilon, to_dro_variables, DroVariables};
use wdro_core::solve::{multistart, FailedRun};
use wdro_core::{
    CorruptionKind, CorruptionSpec, CvarResult, Dataset, EmpiricalObjective, Hyperplane, MarginProfile, ObjectiveSpec,
    SolveOptions, SolveReport, WorstCaseResult,
};

use crate::args::{CertifyArgs, Cli, DataArgs, LossArg, OracleArgs, ReproduceArgs, TableArg, TrainArgs};
use crate::output::{resolve, validation, write_csv, write_json, Report};

pub struct Outcome {
    pub written: Vec<PathBuf>,
    /// False when a certification check failed; the report is still written.
    pub all_passed: bool,
}

impl Outcome {
    fn ok(written: Vec<PathBuf>) -> Self {
        Outcome {
            written,
            all_passed: true,
        }
    }
}

#[derive(Serialize)]
struct DataConfig {
    source: &'static str,
    path: Option<PathBuf>,
    n: usize,
    d: usize,
    seed: u64,
    corruptions: Vec<CorruptionSpec>,
}

/// Loads or generates the data, then flips labels and injects adversarial
/// points, in that order.
fn dataset(args: &DataArgs) -> Result<(Dataset, DataConfig)> {
    let (ds, source) = match &args.data {
        Some(path) => (load_csv(path)?, "csv"),
        None => (generate_separable(args.n, args.d, args.seed)?, "generated"),
    };
    let corruptions: Vec<CorruptionSpec> = [
        (CorruptionKind::FlipLabels, args.flip_fraction),
        (CorruptionKind::InjectAdversarial, args.adv_fraction),
    ]
    .into_iter()
    .filter(|&(_, fraction)| fraction != 0.0)
    .map(|(kind, fraction)| CorruptionSpec {
        kind,
        fraction,
        seed: args.seed,
    })
    .collect();
    let mut ds = ds;
    for c in &corruptions {
        ds = c.apply(&ds)?;
    }
    let config = DataConfig {
        source,
        path: args.data.clone(),
        n: ds.len(),
        d: ds.dim(),
        seed: args.seed,
        corruptions,
    };
    Ok((ds, config))
}

#[derive(Serialize)]
struct TrainConfig {
    data: DataConfig,
    loss: LossArg,
    objective: ObjectiveSpec,
    starts: usize,
    solve: SolveOptions,
    reference: Vec<f64>,
}

#[derive(Serialize)]
struct TrainCluster {
    hyperplane: Hyperplane,
    value: f64,
    members: Vec<usize>,
    sin_angle_to_reference: Option<f64>,
    imputed_epsilon: f64,
    dro_variables: DroVariables,
}

#[derive(Serialize)]
struct TrainResult {
    clusters: Vec<TrainCluster>,
    /// Index into `clusters` of the cluster reached from the most starts.
    dominant_cluster: usize,
    unconverged_runs: usize,
    failed: Vec<FailedRun>,
    starts: Vec<Vec<f64>>,
    runs: Vec<Option<SolveReport>>,
}

pub fn train(cli: &Cli, a: &TrainArgs) -> Result<Outcome> {
    let (ds, data) = dataset(&a.data)?;
    let loss = a.loss.spec(a.sigma)?;
    let objective = ObjectiveSpec::squared(loss, a.epsilon_bar)?;
    let obj = EmpiricalObjective::new(objective, &ds)?;
    let reference = match &a.reference {
        Some(r) if r.len() != ds.dim() => {
            return Err(validation(format!(
                "--reference has {} entries, data has d = {}",
                r.len(),
                ds.dim()
            )))
        }
        Some(r) => r.clone(),
        None => Hyperplane::canonical(ds.dim()).w,
    };
    let opts = a.solver.options(a.data.seed);
    opts.validate()?;
    let report = multistart(&obj, a.starts, &opts, Some(&reference))?;
    if report.clusters.is_empty() {
        return Err(wdro_core::Error::NonFinite {
            what: format!("every one of the {} runs", a.starts),
        }
        .into());
    }
    let clusters = report
        .clusters
        .iter()
        .map(|c| {
            let h = Hyperplane::from_stacked(&c.representative);
            Ok(TrainCluster {
                imputed_epsilon: imputed_epsilon(a.epsilon_bar, &h)?,
                dro_variables: to_dro_variables(&h),
                hyperplane: h,
                value: c.value,
                members: c.members.clone(),
                sin_angle_to_reference: c.sin_angle_to_reference,
            })
        })
        .collect::<wdro_core::Result<Vec<_>>>()?;
    let dominant_cluster = (0..clusters.len())
        .rev()
        .max_by_key(|&i| clusters[i].members.len())
        .unwrap_or(0);
    let result = TrainResult {
        clusters,
        dominant_cluster,
        unconverged_runs: report.runs.iter().flatten().filter(|r| !r.converged).count(),
        failed: report.failed,
        starts: report.starts,
        runs: report.runs,
    };
    let mut written = Vec::new();
    if let Some(path) = &a.trace_csv {
        write_csv(path, &trace_rows(&result.runs))?;
        written.push(path.clone());
    }
    let mut out = Report::new(
        "train",
        TrainConfig {
            data,
            loss: a.loss,
            objective,
            starts: a.starts,
            solve: opts,
            reference,
        },
        result,
    );
    out.notes = vec![
        "starts are uniform on the unit sphere in (w, b)".into(),
        "clusters: sin angle <= 1e-2, relative intercept gap <= 1e-2, relative value gap <= 1e-6".into(),
        "clusters are sorted by objective value, lowest first".into(),
    ];
    let path = resolve(a.out.as_deref(), &cli.out_dir, "train.json");
    write_json(&path, &out)?;
    written.push(path);
    Ok(Outcome::ok(written))
}

#[derive(Serialize)]
struct TraceRow {
    run: usize,
    iteration: usize,
    value: f64,
    grad_norm: f64,
}

fn trace_rows(runs: &[Option<SolveReport>]) -> Vec<TraceRow> {
    runs.iter()
        .enumerate()
        .filter_map(|(run, r)| r.as_ref().map(|r| (run, r)))
        .flat_map(|(run, r)| {
            r.trace.iter().map(move |t| TraceRow {
                run,
                iteration: t.iteration,
                value: t.value,
                grad_norm: t.grad_norm,
            })
        })
        .collect()
}

#[derive(Serialize)]
struct OracleConfig {
    data: DataConfig,
    hyperplane: Hyperplane,
    epsilon: f64,
    rho: f64,
}

#[derive(Serialize)]
struct OracleResult {
    worst_case_dual: WorstCaseResult,
    worst_case_knapsack: f64,
    dual_minus_knapsack: f64,
    cvar: CvarResult,
    /// Absent when `epsilon = 0`.
    chance_cvar: Option<ChanceCvarCheck>,
    margin: MarginProfile,
}

pub fn oracle(cli: &Cli, a: &OracleArgs) -> Result<Outcome> {
    let (ds, data) = dataset(&a.data)?;
    if a.w.len() != ds.dim() {
        return Err(validation(format!(
            "--w has {} entries, data has d = {}",
            a.w.len(),
            ds.dim()
        )));
    }
    let h = Hyperplane::new(a.w.clone(), a.b);
    if !h.is_finite() {
        return Err(validation("hyperplane coefficients must be finite"));
    }
    let dual = worst_case_prob_dual(&ds, &h, a.epsilon)?;
    let knapsack = worst_case_prob_knapsack(&ds, &h, a.epsilon)?;
    let result = OracleResult {
        worst_case_dual: dual,
        worst_case_knapsack: knapsack,
        dual_minus_knapsack: dual.value - knapsack,
        cvar: cvar_distance(&ds, &h, a.rho)?,
        chance_cvar: if a.epsilon > 0.0 {
            Some(check_chance_cvar(&ds, &h, a.epsilon, a.rho)?)
        } else {
            None
        },
        margin: margin_profile(&h, &ds),
    };
    let mut out = Report::new(
        "oracle",
        OracleConfig {
            data,
            hyperplane: h,
            epsilon: a.epsilon,
            rho: a.rho,
        },
        result,
    );
    out.notes = vec![
        "t_star = 0 denotes the limit t -> 0+; \"inf\" denotes t -> inf".into(),
        "a point counts as misclassified when its distance is <= 1e-12 (1 + ||x||)".into(),
    ];
    let path = resolve(a.out.as_deref(), &cli.out_dir, "oracle.json");
    write_json(&path, &out)?;
    Ok(Outcome::ok(vec![path]))
}

#[derive(Serialize)]
struct ReproduceConfig {
    table: TableArg,
    experiment: ExperimentConfig,
}

#[derive(Serialize)]
struct ReproduceResult<R: Serialize> {
    csv: PathBuf,
    checks: Vec<TrendCheck>,
    rows: Vec<R>,
}

fn sidecar(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

fn emit<R: Serialize>(csv: PathBuf, config: ReproduceConfig, rows: Vec<R>, checks: Vec<TrendCheck>) -> Result<Outcome> {
    write_csv(&csv, &rows)?;
    let json = sidecar(&csv);
    let mut out = Report::new(
        "reproduce",
        config,
        ReproduceResult {
            csv: csv.clone(),
            checks,
            rows,
        },
    );
    out.notes = vec![
        "trend checks are reported, not enforced; a failed check does not change the exit status".into(),
        "row seed = seed + 1000 * key + repetition, key = n for t1, percentage for t3/t4, 0 for t2".into(),
    ];
    write_json(&json, &out)?;
    Ok(Outcome::ok(vec![csv, json]))
}

pub fn reproduce(cli: &Cli, a: &ReproduceArgs) -> Result<Outcome> {
    let experiment = ExperimentConfig {
        seed: a.seed,
        scale: a.scale,
        sigma: a.sigma,
        epsilon_bar: a.epsilon_bar,
        d: a.d,
        starts: a.starts,
        hinge_starts: a.starts,
        ..Default::default()
    };
    experiment.validate()?;
    let name = match a.table {
        TableArg::T1 => "table1.csv",
        TableArg::T2 => "table2.csv",
        TableArg::T3 => "table3.csv",
        TableArg::T4 => "table4.csv",
    };
    let csv = resolve(a.out.as_deref(), &cli.out_dir, name);
    if csv.extension().is_some_and(|e| e == "json") {
        return Err(validation(
            "--out must not end in .json; the summary is written next to the CSV",
        ));
    }
    let config = ReproduceConfig {
        table: a.table,
        experiment,
    };
    let cfg = &config.experiment;
    match a.table {
        TableArg::T1 => {
            let rows = table1_rows(cfg, &TABLE1_SIZES)?;
            let checks = table1_checks(&rows);
            emit(csv, config, rows, checks)
        }
        TableArg::T2 => {
            let rows = table2_rows(cfg, &TABLE2_WEIGHTS)?;
            let checks = table2_checks(&rows);
            emit(csv, config, rows, checks)
        }
        TableArg::T3 => {
            let rows = table3_rows(cfg, &TABLE3_FRACTIONS)?;
            let checks = table3_checks(&rows);
            emit(csv, config, rows, checks)
        }
        TableArg::T4 => {
            let rows = table4_rows(cfg, &TABLE4_FRACTIONS)?;
            let checks = table4_checks(&rows);
            emit(csv, config, rows, checks)
        }
    }
    .context("running the benchmark table")
}

#[derive(Serialize)]
struct CertifyConfig {
    epsilon: Vec<f64>,
    grid: usize,
    half_width: f64,
}

#[derive(Serialize)]
struct Check {
    name: String,
    passed: bool,
    measured: f64,
    tolerance: f64,
}

impl Check {
    fn at_most(name: &str, measured: f64, tolerance: f64) -> Self {
        Check {
            name: name.to_string(),
            passed: measured <= tolerance,
            measured,
            tolerance,
        }
    }
}

#[derive(Serialize)]
struct Certificate {
    epsilon: f64,
    stationary_points: Vec<StationaryPoint>,
    closed_form_minimizer: [f64; 2],
    closed_form_value: f64,
    origin: OriginDerivatives,
    checks: Vec<Check>,
}

#[derive(Serialize)]
struct CertifyResult {
    all_passed: bool,
    certificates: Vec<Certificate>,
    checks: Vec<Check>,
}

fn certificate(eps: f64, a: &CertifyArgs) -> Result<Certificate> {
    let model = UniformModel::new(eps)?;
    let points = scan_stationary_points(&model, -a.half_width, a.half_width, a.grid)?;
    let w = closed_form_minimizer(eps);
    let f = closed_form_min_value(eps);
    let origin = origin_directional_derivatives(&model);
    let mut checks = vec![Check {
        name: "single_stationary_point".into(),
        passed: points.len() == 1,
        measured: points.len() as f64,
        tolerance: 0.0,
    }];
    let (loc, val) = match points.as_slice() {
        [p] => (
            (p.w[0] - w[0]).abs().max((p.w[1] - w[1]).abs()),
            (f_epsilon(&model, p.w) - f).abs(),
        ),
        _ => (f64::INFINITY, f64::INFINITY),
    };
    checks.push(Check::at_most("minimizer_location", loc, 1e-4));
    checks.push(Check::at_most("minimum_value", val, 1e-6));
    checks.push(Check::at_most(
        "origin_derivative_plus_e1",
        (origin.along_plus_e1 + 0.5).abs(),
        1e-4,
    ));
    checks.push(Check::at_most(
        "origin_derivative_minus_e1",
        origin.along_minus_e1.abs(),
        1e-6,
    ));
    Ok(Certificate {
        epsilon: eps,
        stationary_points: points,
        closed_form_minimizer: w,
        closed_form_value: f,
        origin,
        checks,
    })
}

pub fn certify(cli: &Cli, a: &CertifyArgs) -> Result<Outcome> {
    if let Some(bad) = a.epsilon.iter().find(|e| !(**e > 0.0 && e.is_finite())) {
        return Err(validation(format!(
            "--epsilon values must be positive and finite, got {bad}"
        )));
    }
    if !(a.half_width > 0.0 && a.half_width.is_finite()) {
        return Err(validation("--half-width must be positive and finite"));
    }
    let certificates = a
        .epsilon
        .iter()
        .map(|&eps| certificate(eps, a))
        .collect::<Result<Vec<_>>>()?;
    // the two closed-form branches meet at eps = 1/2
    let (lo, hi) = (0.5, 0.5 + 1e-12);
    let (wl, wh) = (closed_form_minimizer(lo), closed_form_minimizer(hi));
    let gap = (wl[0] - wh[0])
        .abs()
        .max((closed_form_min_value(lo) - closed_form_min_value(hi)).abs());
    let checks = vec![Check::at_most("branch_continuity_at_0.5", gap, 1e-9)];
    let all_passed = checks
        .iter()
        .chain(certificates.iter().flat_map(|c| c.checks.iter()))
        .all(|c| c.passed);
    let out = Report::new(
        "certify",
        CertifyConfig {
            epsilon: a.epsilon.clone(),
            grid: a.grid,
            half_width: a.half_width,
        },
        CertifyResult {
            all_passed,
            certificates,
            checks,
        },
    );
    let path = resolve(a.out.as_deref(), &cli.out_dir, "certify.json");
    write_json(&path, &out)?;
    Ok(Outcome {
        written: vec![path],
        all_passed,
    })
}
