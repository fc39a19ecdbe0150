use std::time::Instant;

use super::direction::{newton_direction, NewtonSystem};
use super::registry::direction_registry;
use super::{Curvature, SolveError, SolveReport, Solver, SolverConfig, Termination, TraceRow};
use crate::ceil_mul;
use crate::heaviside::{default_zero_tol, partition_unchecked, IndexPartition};
use crate::linalg::norm2;
use crate::model::{evaluate, Problem};
use crate::stationarity::{residual_with_gradient, Iterate};

/// Newton iteration with a fixed budget.
#[derive(Debug, Clone, Copy, Default)]
pub struct Nhs;

/// Newton iteration that shrinks the budget and `tau` as it goes.
#[derive(Debug, Clone, Copy, Default)]
pub struct Nhst;

impl Solver for Nhs {
    fn name(&self) -> &'static str {
        "nhs"
    }

    fn solve(&self, problem: &Problem, w0: &Iterate, config: &SolverConfig) -> Result<SolveReport, SolveError> {
        nhs_solve(problem, w0, config)
    }
}

impl Solver for Nhst {
    fn name(&self) -> &'static str {
        "nhst"
    }

    fn solve(&self, problem: &Problem, w0: &Iterate, config: &SolverConfig) -> Result<SolveReport, SolveError> {
        nhst_solve(problem, w0, config)
    }
}

/// `ceil(rho0 |Gamma_+^0|)` clamped to `[1, m - 1]`.
pub fn initial_budget(positives: usize, m: usize, config: &SolverConfig) -> usize {
    ceil_mul(config.rho0, positives).clamp(1, m.saturating_sub(1).max(1))
}

/// `min(ceil(rho1 s_k), ceil(rho2 |Gamma_+^k|))` clamped to `[1, m - 1]`.
pub fn next_budget(s_k: usize, positives: usize, m: usize, config: &SolverConfig) -> usize {
    ceil_mul(config.rho1, s_k)
        .min(ceil_mul(config.rho2, positives))
        .clamp(1, m.saturating_sub(1).max(1))
}

/// `tau0 / decay^floor(k / period)`
pub fn tau_at(k: usize, config: &SolverConfig) -> f64 {
    config.tau0 / config.tau_decay.powi((k / config.tau_decay_period) as i32)
}

/// Runs the fixed-budget iteration. `s` comes from `config.fixed_s`, or the
/// problem's budget when unset; `tau` is `config.tau0` throughout.
pub fn nhs_solve(problem: &Problem, w0: &Iterate, config: &SolverConfig) -> Result<SolveReport, SolveError> {
    config.validate()?;
    let s = config.fixed_s.unwrap_or(problem.budget().s());
    problem.budget().with_s(s).map_err(crate::model::ModelError::from)?;
    run(problem, w0, config, Schedule::Fixed(s))
}

/// Runs the shrinking-budget iteration. The problem's own budget is ignored.
pub fn nhst_solve(problem: &Problem, w0: &Iterate, config: &SolverConfig) -> Result<SolveReport, SolveError> {
    config.validate()?;
    run(problem, w0, config, Schedule::Shrinking)
}

#[derive(Debug, Clone, Copy)]
enum Schedule {
    Fixed(usize),
    Shrinking,
}

fn split(z: &[f64], s: usize) -> IndexPartition {
    partition_unchecked(z, s, default_zero_tol(z))
}

fn run(problem: &Problem, w0: &Iterate, config: &SolverConfig, schedule: Schedule) -> Result<SolveReport, SolveError> {
    w0.check_dims(problem)?;
    if w0.x.iter().chain(&w0.lambda).any(|v| !v.is_finite()) {
        return Err(crate::stationarity::StationarityError::NonFinite.into());
    }
    let direction = direction_registry().resolve(&config.direction)?;
    let start = Instant::now();
    let (n, m) = (problem.n(), problem.m());
    let tol = config.tolerance(n);
    let tau_for = |k: usize| match schedule {
        Schedule::Fixed(_) => config.tau0,
        Schedule::Shrinking => tau_at(k, config),
    };
    let stop_budget = ceil_mul(config.rho3, m);

    let mut w = Iterate {
        x: w0.x.clone(),
        lambda: w0.lambda.clone(),
        tau: tau_for(0),
    };
    let z = w.shifted(problem);
    let mut s = match schedule {
        Schedule::Fixed(s) => s,
        Schedule::Shrinking => initial_budget(split(&z, m).positives(), m, config),
    };
    let mut part = split(&z, s);
    let mut trace = Vec::new();
    let mut k = 0;

    let finish = |w: Iterate, k, res, s, termination, trace| SolveReport {
        solver: match schedule {
            Schedule::Fixed(_) => "nhs".into(),
            Schedule::Shrinking => "nhst".into(),
        },
        x: w.x,
        lambda: w.lambda,
        tau: w.tau,
        iterations: k,
        final_residual: res,
        final_s: s,
        termination,
        trace,
        wall_time_secs: start.elapsed().as_secs_f64(),
    };

    loop {
        let mut eval = evaluate(problem.objective(), &w.x)?;
        if config.curvature == Curvature::Majorant {
            if let Some(h) = problem.objective().majorant_hessian(&w.x) {
                eval.hessian = h;
            }
        }
        let t = &part.working_set;
        let f = residual_with_gradient(problem, &w, t, &eval.gradient);
        let res = norm2(&f);
        trace.push(TraceRow {
            iter: k,
            residual: res,
            s_k: s,
            tau_k: w.tau,
            t_size: t.len(),
            positives: part.gamma_plus.len(),
            zeros: part.gamma_zero.len(),
            damping: 0.0,
        });

        let converged = res <= tol
            && match schedule {
                Schedule::Fixed(_) => true,
                Schedule::Shrinking => s <= stop_budget,
            };
        if converged {
            return Ok(finish(w, k, res, s, Termination::ResidualMet, trace));
        }
        if k >= config.max_iterations || !res.is_finite() {
            return Ok(finish(w, k, res, s, Termination::MaxIterations, trace));
        }

        let sys = NewtonSystem {
            a: problem.a(),
            hessian: &eval.hessian,
            working_set: t,
            r1: &f[..n],
            r2: &f[n..n + t.len()],
        };
        let d = match newton_direction(direction.as_ref(), &sys, &w.lambda, config.damping0) {
            Ok(d) => d,
            Err(_) => {
                let report = finish(w, k, res, s, Termination::DirectionFailure, trace);
                return Err(SolveError::DirectionFailure {
                    report: Box::new(report),
                });
            }
        };
        if let Some(row) = trace.last_mut() {
            row.damping = d.damping;
        }
        for (xi, di) in w.x.iter_mut().zip(&d.dx) {
            *xi += di;
        }
        for (li, di) in w.lambda.iter_mut().zip(&d.dlambda) {
            *li += di;
        }

        let positives = part.gamma_plus.len();
        k += 1;
        if let Schedule::Shrinking = schedule {
            s = next_budget(s, positives, m, config);
        }
        w.tau = tau_for(k);
        part = split(&w.shifted(problem), s);
    }
}
