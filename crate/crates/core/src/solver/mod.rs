//! Newton solvers for the stationary equations.
//!
//! Two interchangeable layers, each behind a trait and looked up by name:
//!
//! * [`Solver`]: the outer iteration. `"nhs"` keeps the budget `s` fixed,
//!   `"nhst"` shrinks it geometrically while iterating.
//! * [`DirectionSolver`]: how the Newton system is solved. `"schur"` uses
//!   block elimination for diagonal Hessians, `"kkt"` factors the assembled
//!   saddle matrix, `"auto"` picks between them.
//!
//! Both registries come pre-populated; callers can register their own
//! strategies under new names.

mod direction;
mod newton;
mod registry;

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use direction::{
    newton_direction, AutoDirection, Direction, DirectionSolver, KktDirection, NewtonSystem, SchurDirection,
    MAX_DAMPING_RETRIES,
};
pub use newton::{initial_budget, next_budget, nhs_solve, nhst_solve, tau_at, Nhs, Nhst};
pub use registry::{direction_registry, solver_registry, Registry};

use crate::model::{ModelError, Problem};
use crate::stationarity::{Iterate, StationarityError};

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("Newton direction could not be computed at iteration {}", .report.iterations)]
    DirectionFailure { report: Box<SolveReport> },
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("unknown {kind} strategy '{name}' (available: {available})")]
    UnknownStrategy {
        kind: &'static str,
        name: String,
        available: String,
    },
    #[error(transparent)]
    Stationarity(#[from] StationarityError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Iteration parameters. Defaults are the standard benchmark settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub max_iterations: usize,
    /// Stopping threshold is `tol_scale * sqrt(n)`.
    pub tol_scale: f64,
    pub tau0: f64,
    /// `tau` is divided by this every `tau_decay_period` iterations (NHST);
    /// 1 keeps it fixed.
    pub tau_decay: f64,
    pub tau_decay_period: usize,
    /// `s_0 = ceil(rho0 |Gamma_+^0|)`
    pub rho0: f64,
    /// `s_{k+1} = min(ceil(rho1 s_k), ceil(rho2 |Gamma_+^k|))`
    pub rho1: f64,
    pub rho2: f64,
    /// NHST stops only once `s_k <= ceil(rho3 m)`.
    pub rho3: f64,
    /// First regularization tried when a Newton system is singular.
    pub damping0: f64,
    /// When set, the budget stays at this value (NHS).
    pub fixed_s: Option<usize>,
    /// Name of the direction strategy.
    pub direction: String,
    pub curvature: Curvature,
}

/// Which second-order model the Newton system uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Curvature {
    /// The objective's Hessian.
    Exact,
    /// The objective's positive definite majorant when it provides one,
    /// otherwise the Hessian. For nonconvex penalties this is the
    /// reweighting step; the fixed points are unchanged.
    #[default]
    Majorant,
}

impl std::str::FromStr for Curvature {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exact" => Ok(Self::Exact),
            "majorant" => Ok(Self::Majorant),
            other => Err(format!("unknown curvature '{other}' (available: exact, majorant)")),
        }
    }
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iterations: 1000,
            tol_scale: 1e-6,
            tau0: 0.5,
            tau_decay: 1.1,
            tau_decay_period: 10,
            rho0: 0.5,
            rho1: 0.5,
            rho2: 0.5,
            rho3: 0.001,
            damping0: 1e-8,
            fixed_s: None,
            direction: "auto".to_string(),
            curvature: Curvature::Majorant,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolveError> {
        let open_unit = |name: &str, v: f64| {
            if v > 0.0 && v < 1.0 {
                Ok(())
            } else {
                Err(SolveError::InvalidConfig(format!("{name} must lie in (0, 1), got {v}")))
            }
        };
        open_unit("rho0", self.rho0)?;
        open_unit("rho1", self.rho1)?;
        open_unit("rho2", self.rho2)?;
        open_unit("rho3", self.rho3)?;
        if !(self.tau0 > 0.0 && self.tau0.is_finite()) {
            return Err(SolveError::InvalidConfig(format!(
                "tau0 must be positive, got {}",
                self.tau0
            )));
        }
        if !(self.tau_decay >= 1.0 && self.tau_decay.is_finite()) {
            return Err(SolveError::InvalidConfig(format!(
                "tau_decay must be >= 1, got {}",
                self.tau_decay
            )));
        }
        if self.tau_decay_period == 0 {
            return Err(SolveError::InvalidConfig("tau_decay_period must be >= 1".into()));
        }
        if !(self.tol_scale > 0.0) {
            return Err(SolveError::InvalidConfig(format!(
                "tol_scale must be positive, got {}",
                self.tol_scale
            )));
        }
        if !(self.damping0 > 0.0) {
            return Err(SolveError::InvalidConfig(format!(
                "damping0 must be positive, got {}",
                self.damping0
            )));
        }
        if self.fixed_s == Some(0) {
            return Err(SolveError::InvalidConfig("fixed_s must be >= 1".into()));
        }
        Ok(())
    }

    pub fn tolerance(&self, n: usize) -> f64 {
        self.tol_scale * (n as f64).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    ResidualMet,
    MaxIterations,
    DirectionFailure,
}

/// One row per visited iterate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iter: usize,
    pub residual: f64,
    pub s_k: usize,
    pub tau_k: f64,
    pub t_size: usize,
    pub positives: usize,
    pub zeros: usize,
    /// Regularization used for the step taken from this iterate.
    pub damping: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub solver: String,
    pub x: Vec<f64>,
    pub lambda: Vec<f64>,
    pub tau: f64,
    pub iterations: usize,
    pub final_residual: f64,
    pub final_s: usize,
    pub termination: Termination,
    pub trace: Vec<TraceRow>,
    pub wall_time_secs: f64,
}

impl SolveReport {
    pub fn iterate(&self) -> Iterate {
        Iterate {
            x: self.x.clone(),
            lambda: self.lambda.clone(),
            tau: self.tau,
        }
    }

    /// Trace as CSV with columns `iter,residual,s_k,tau_k,T_size`.
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("iter,residual,s_k,tau_k,T_size\n");
        for r in &self.trace {
            let _ = writeln!(out, "{},{:e},{},{:e},{}", r.iter, r.residual, r.s_k, r.tau_k, r.t_size);
        }
        out
    }
}

/// An outer Newton iteration on the stationary equations.
pub trait Solver: Send + Sync {
    fn name(&self) -> &'static str;

    fn solve(&self, problem: &Problem, w0: &Iterate, config: &SolverConfig) -> Result<SolveReport, SolveError>;
}
