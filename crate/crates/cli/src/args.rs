use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use wdro_core::{LossSpec, Method};

#[derive(Debug, Parser)]
#[command(name = "wdro", version, about = "Wasserstein-robust linear classification")]
pub struct Cli {
    /// Directory for output files when --out is not given.
    #[arg(long, global = true, env = "WDRO_OUT_DIR", default_value = ".")]
    pub out_dir: PathBuf,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a smoothed ramp or hinge classifier from random starts.
    #[command(allow_negative_numbers = true)]
    Train(TrainArgs),
    /// Worst-case misclassification probability, CVaR and margins of a fixed
    /// hyperplane.
    #[command(allow_negative_numbers = true)]
    Oracle(OracleArgs),
    /// Run one of the synthetic benchmark tables.
    #[command(allow_negative_numbers = true)]
    Reproduce(ReproduceArgs),
    /// Check the uniform two-dimensional model against its closed forms.
    #[command(allow_negative_numbers = true)]
    Certify(CertifyArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DataArgs {
    /// CSV dataset with header x1..xd,y[,p]; separable data is generated
    /// when absent.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long, default_value_t = 10)]
    pub d: usize,
    /// Seeds generation, corruption and start points.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Fraction of labels to flip.
    #[arg(long, default_value_t = 0.0)]
    pub flip_fraction: f64,
    /// Fraction of points moved to x1 = -10 with label +1 (after flipping).
    #[arg(long, default_value_t = 0.0)]
    pub adv_fraction: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LossArg {
    Ramp,
    Sramp,
    Shinge,
}

impl LossArg {
    pub fn spec(self, sigma: f64) -> wdro_core::Result<LossSpec> {
        match self {
            LossArg::Ramp => Ok(LossSpec::ramp()),
            LossArg::Sramp => LossSpec::smoothed_ramp(sigma),
            LossArg::Shinge => LossSpec::smoothed_hinge(sigma),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Cg,
    Lbfgs,
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    #[arg(long, value_enum, default_value_t = MethodArg::Cg)]
    pub method: MethodArg,
    /// L-BFGS memory.
    #[arg(long, default_value_t = 10)]
    pub memory: usize,
    #[arg(long, default_value_t = 1e-8)]
    pub grad_tol: f64,
    #[arg(long, default_value_t = 10_000)]
    pub max_iters: usize,
}

impl SolverArgs {
    pub fn options(&self, seed: u64) -> wdro_core::SolveOptions {
        wdro_core::SolveOptions {
            method: match self.method {
                MethodArg::Cg => Method::CgPrPlus,
                MethodArg::Lbfgs => Method::Lbfgs { memory: self.memory },
            },
            grad_tol: self.grad_tol,
            max_iters: self.max_iters,
            seed,
            ..Default::default()
        }
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value_t = 0.1)]
    pub epsilon_bar: f64,
    #[arg(long, default_value_t = 0.02)]
    pub sigma: f64,
    #[arg(long, value_enum, default_value_t = LossArg::Sramp)]
    pub loss: LossArg,
    #[arg(long, default_value_t = 20)]
    pub starts: usize,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Direction to measure angles against; defaults to e1.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub reference: Option<Vec<f64>>,
    /// JSON report path.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the per-iteration trace of every run as CSV.
    #[arg(long)]
    pub trace_csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Normal vector, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    pub w: Vec<f64>,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub b: f64,
    /// Wasserstein radius.
    #[arg(long, default_value_t = 0.0)]
    pub epsilon: f64,
    /// Risk level for CVaR and the chance constraint.
    #[arg(long, default_value_t = 0.5)]
    pub rho: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TableArg {
    T1,
    T2,
    T3,
    T4,
}

#[derive(Debug, Args)]
pub struct ReproduceArgs {
    #[arg(long, value_enum)]
    pub table: TableArg,
    /// In (0, 1]; shrinks sample sizes and start counts.
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 20)]
    pub starts: usize,
    #[arg(long, default_value_t = 0.02)]
    pub sigma: f64,
    /// Regularization weight (ignored by t2, which sweeps it).
    #[arg(long, default_value_t = 0.1)]
    pub epsilon_bar: f64,
    #[arg(long, default_value_t = 10)]
    pub d: usize,
    /// CSV path; a JSON summary is written next to it.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CertifyArgs {
    /// Regularization weights to certify, comma separated.
    #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
    pub epsilon: Vec<f64>,
    /// Scan cells per axis.
    #[arg(long, default_value_t = 300)]
    pub grid: usize,
    /// Scan box is [-half_width, half_width]^2.
    #[arg(long, default_value_t = 3.0)]
    pub half_width: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}
