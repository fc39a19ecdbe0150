use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hsco::dataio::Covariance;
use hsco::{Curvature, SolverConfig};

#[derive(Debug, Parser)]
#[command(
    name = "hsco",
    version,
    about = "Newton solvers for Heaviside-set constrained problems"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a 0/1-loss SVM on a libsvm file and report accuracy.
    Svm(SvmArgs),
    /// Recover a sparse signal from flipped 1-bit measurements.
    Cs1bit(Cs1bitArgs),
    /// Check whether a saved point is stationary for a problem.
    Verify(VerifyArgs),
    /// Write a synthetic 1-bit sensing instance as JSON.
    Gen(GenArgs),
    /// Run seeded 1-bit sensing trials over a grid of sizes.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Nhs,
    Nhst,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Nhs => "nhs",
            Method::Nhst => "nhst",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CovArg {
    Ind,
    Cor,
}

impl From<CovArg> for Covariance {
    fn from(c: CovArg) -> Self {
        match c {
            CovArg::Ind => Covariance::Independent,
            CovArg::Cor => Covariance::Correlated,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CurvatureArg {
    Exact,
    Majorant,
}

/// Solver overrides; anything left unset keeps the library default.
#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    #[arg(long, value_enum, default_value = "nhst")]
    pub method: Method,
    /// Newton system strategy: auto, schur or kkt.
    #[arg(long)]
    pub direction: Option<String>,
    #[arg(long, value_enum)]
    pub curvature: Option<CurvatureArg>,
    #[arg(long)]
    pub tau0: Option<f64>,
    #[arg(long)]
    pub tau_decay: Option<f64>,
    #[arg(long)]
    pub rho0: Option<f64>,
    #[arg(long)]
    pub rho1: Option<f64>,
    #[arg(long)]
    pub rho2: Option<f64>,
    #[arg(long)]
    pub rho3: Option<f64>,
    /// Stop once the residual is below tol-scale * sqrt(n).
    #[arg(long)]
    pub tol_scale: Option<f64>,
    #[arg(long)]
    pub maxit: Option<usize>,
    /// Leave wall-clock fields out so repeated runs give identical output.
    #[arg(long)]
    pub no_timing: bool,
}

impl SolverArgs {
    pub fn config(&self) -> SolverConfig {
        let mut c = SolverConfig::default();
        if let Some(v) = &self.direction {
            c.direction = v.clone();
        }
        if let Some(v) = self.curvature {
            c.curvature = match v {
                CurvatureArg::Exact => Curvature::Exact,
                CurvatureArg::Majorant => Curvature::Majorant,
            };
        }
        let set = |slot: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *slot = v;
            }
        };
        set(&mut c.tau0, self.tau0);
        set(&mut c.tau_decay, self.tau_decay);
        set(&mut c.rho0, self.rho0);
        set(&mut c.rho1, self.rho1);
        set(&mut c.rho2, self.rho2);
        set(&mut c.rho3, self.rho3);
        set(&mut c.tol_scale, self.tol_scale);
        if let Some(v) = self.maxit {
            c.max_iterations = v;
        }
        c
    }
}

#[derive(Debug, Args)]
pub struct SvmArgs {
    #[arg(long)]
    pub train: PathBuf,
    /// Scored with the training set's scaling.
    #[arg(long)]
    pub test: Option<PathBuf>,
    /// Budget for the fixed-budget method; defaults to ceil(rho3 m).
    #[arg(long)]
    pub s: Option<usize>,
    /// Weight on the bias coordinate in the objective.
    #[arg(long, default_value_t = hsco::model::SvmObjective::DEFAULT_D_LAST)]
    pub d_last: f64,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct GeneratorArgs {
    #[arg(long)]
    pub n: Option<usize>,
    /// Defaults to ceil(0.25 n).
    #[arg(long)]
    pub m: Option<usize>,
    /// Defaults to ceil(0.01 n).
    #[arg(long)]
    pub k: Option<usize>,
    /// Fraction of measurement signs flipped; defaults to 0.05.
    #[arg(long)]
    pub flip: Option<f64>,
    #[arg(long, value_enum)]
    pub cov: Option<CovArg>,
    #[arg(long)]
    pub seed: Option<u64>,
}

impl GeneratorArgs {
    pub fn any_set(&self) -> bool {
        self.n.is_some()
            || self.m.is_some()
            || self.k.is_some()
            || self.flip.is_some()
            || self.cov.is_some()
            || self.seed.is_some()
    }
}

#[derive(Debug, Args)]
pub struct Cs1bitArgs {
    /// Instance JSON written by `gen`; excludes the generator flags.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[command(flatten)]
    pub generator: GeneratorArgs,
    /// Margin epsilon in the sign constraints.
    #[arg(long, default_value_t = 1e-3)]
    pub margin: f64,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// 1-bit sensing instance JSON.
    #[arg(long, conflicts_with = "train", required_unless_present = "train")]
    pub instance: Option<PathBuf>,
    /// libsvm training file; scaled and augmented as in `svm`.
    #[arg(long)]
    pub train: Option<PathBuf>,
    /// JSON with fields `x`, `lambda`, `tau`, as written by `--save-point`.
    #[arg(long)]
    pub point: PathBuf,
    #[arg(long)]
    pub s: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub margin: f64,
    #[arg(long, default_value_t = hsco::model::SvmObjective::DEFAULT_D_LAST)]
    pub d_last: f64,
    /// Relative tolerance for the gradient test and the zero band.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[command(flatten)]
    pub generator: GeneratorArgs,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Sizes to sweep, e.g. `n=256,512,1000`.
    #[arg(long)]
    pub grid: String,
    #[arg(long, default_value_t = 0.25)]
    pub m_ratio: f64,
    #[arg(long, default_value_t = 0.01)]
    pub k_ratio: f64,
    #[arg(long, default_value_t = 0.05)]
    pub flip: f64,
    #[arg(long, value_enum, default_value = "ind")]
    pub cov: CovArg,
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
    /// Trial t uses seed `seed + t`.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-3)]
    pub margin: f64,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Also write the final primal-dual point as JSON.
    #[arg(long)]
    pub save_point: Option<PathBuf>,
}
