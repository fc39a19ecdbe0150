use std::io::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use hsco::dataio::{
    generate_cs_instance, read_libsvm, scale_and_augment, starting_point, Covariance, CsInstance, DataError,
    ProblemKind, Scaler,
};
use hsco::linalg::norm2;
use hsco::metrics::{
    aggregate, classification_accuracy, csv_row, recovery_metrics, Aggregate, TrialResult, CSV_HEADER,
};
use hsco::model::{build_cs_problem, build_svm_problem, CsModelParams};
use hsco::solver::{solver_registry, SolveError};
use hsco::stationarity::verify_stationary;
use hsco::{Iterate, Matrix, Problem, SolveReport, SolverConfig, Termination};

use crate::args::{BenchArgs, CovArg, Cs1bitArgs, Format, GenArgs, GeneratorArgs, Method, SvmArgs, VerifyArgs};
use crate::error::{CliError, Result};

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| {
        DataError::Io {
            path: path.to_path_buf(),
            source,
        }
        .into()
    })
}

fn emit(output: Option<&Path>, text: &str) -> Result<()> {
    match output {
        Some(path) => std::fs::write(path, text).map_err(|source| CliError::Output {
            path: path.to_path_buf(),
            source,
        }),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|source| CliError::Output {
                    path: "<stdout>".into(),
                    source,
                })
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

/// `ceil(r n)` ignoring rounding noise, at least 1.
fn ratio_ceil(r: f64, n: usize) -> usize {
    let p = r * n as f64;
    ((p - 1e-9 * p.max(1.0)).ceil() as usize).max(1)
}

fn solve(
    method: Method,
    p: &Problem,
    w0: &Iterate,
    cfg: &SolverConfig,
) -> std::result::Result<SolveReport, SolveError> {
    solver_registry().resolve(method.name())?.solve(p, w0, cfg)
}

fn save_point(path: Option<&Path>, report: &SolveReport) -> Result<()> {
    match path {
        Some(p) => emit(Some(p), &to_json(&report.iterate())),
        None => Ok(()),
    }
}

#[derive(Serialize)]
struct SvmReport {
    method: &'static str,
    samples: usize,
    features: usize,
    acc: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    tacc: Option<f64>,
    iterations: usize,
    termination: Termination,
    final_residual: f64,
    final_s: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    time_secs: Option<f64>,
}

pub fn svm(args: &SvmArgs) -> Result<()> {
    let train = read_libsvm(&args.train)?;
    let scaler = Scaler::fit(&train);
    let ds = scaler.apply(&train);
    let m = ds.len();
    let cfg = args.solver.config();
    let s = args.s.unwrap_or_else(|| ratio_ceil(cfg.rho3, m));
    let problem = build_svm_problem(&ds.samples, &ds.labels, s, args.d_last)?;
    let w0 = starting_point(ProblemKind::Svm, &ds.samples, &ds.labels)?;
    let report = solve(args.solver.method, &problem, &w0, &cfg)?;
    let acc =
        classification_accuracy(&ds.samples, &report.x, &ds.labels, m).map_err(|e| CliError::Input(e.to_string()))?;
    let tacc = match &args.test {
        Some(path) => {
            let test = scaler.apply(&read_libsvm(path)?);
            Some(
                classification_accuracy(&test.samples, &report.x, &test.labels, test.len())
                    .map_err(|e| CliError::Input(e.to_string()))?,
            )
        }
        None => None,
    };
    save_point(args.out.save_point.as_deref(), &report)?;
    let out = SvmReport {
        method: args.solver.method.name(),
        samples: m,
        features: ds.feature_count,
        acc,
        tacc,
        iterations: report.iterations,
        termination: report.termination,
        final_residual: report.final_residual,
        final_s: report.final_s,
        time_secs: (!args.solver.no_timing).then_some(report.wall_time_secs),
    };
    let text = match args.out.format {
        Format::Json => to_json(&out),
        Format::Csv => format!(
            "method,m,n,Acc,TAcc,Time,Iter\n{},{},{},{:.6},{},{:.4},{}\n",
            out.method,
            out.samples,
            out.features,
            out.acc,
            out.tacc.map(|v| format!("{v:.6}")).unwrap_or_default(),
            out.time_secs.unwrap_or(0.0),
            out.iterations
        ),
    };
    emit(args.out.output.as_deref(), &text)
}

fn generate(g: &GeneratorArgs) -> Result<CsInstance> {
    let n =
        g.n.ok_or_else(|| CliError::Input("--n is required unless --input is given".into()))?;
    let m = g.m.unwrap_or_else(|| ratio_ceil(0.25, n));
    let k = g.k.unwrap_or_else(|| ratio_ceil(0.01, n));
    let cov: Covariance = g.cov.unwrap_or(CovArg::Ind).into();
    Ok(generate_cs_instance(
        n,
        m,
        k,
        g.flip.unwrap_or(0.05),
        cov,
        g.seed.unwrap_or(0),
    )?)
}

/// One solve on `inst`; the report is kept even when the direction fails.
fn cs_trial(
    inst: &CsInstance,
    margin: f64,
    method: Method,
    cfg: &SolverConfig,
    timing: bool,
) -> Result<(TrialResult, SolveReport, bool)> {
    let a0 = Matrix::Dense(inst.a0.clone());
    let params = CsModelParams {
        epsilon: margin,
        ..CsModelParams::defaults_for(inst.n)
    };
    let s = ratio_ceil(cfg.rho3, inst.m).min(inst.m.saturating_sub(1)).max(1);
    let problem = build_cs_problem(&a0, &inst.c, s, params)?;
    let w0 = starting_point(ProblemKind::Cs, &a0, &inst.c)?;
    let (report, failed) = match solve(method, &problem, &w0, cfg) {
        Ok(r) => (r, false),
        Err(SolveError::DirectionFailure { report }) => (*report, true),
        Err(e) => return Err(e.into()),
    };
    let norm = norm2(&report.x);
    let x: Vec<f64> = if norm > 0.0 {
        report.x.iter().map(|v| v / norm).collect()
    } else {
        report.x.clone()
    };
    let metrics =
        recovery_metrics(&x, &inst.x_true, &a0, &inst.c_clean, &inst.c).map_err(|e| CliError::Input(e.to_string()))?;
    let time = if timing { report.wall_time_secs } else { 0.0 };
    Ok((
        TrialResult::from_recovery(metrics, time, report.iterations),
        report,
        failed,
    ))
}

#[derive(Serialize)]
struct CsReport {
    method: &'static str,
    n: usize,
    m: usize,
    k: usize,
    flip: f64,
    seed: u64,
    /// `null` on exact recovery.
    snr: f64,
    hd: f64,
    he: f64,
    acc: f64,
    iterations: usize,
    termination: Termination,
    final_residual: f64,
    final_s: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    time_secs: Option<f64>,
}

pub fn cs1bit(args: &Cs1bitArgs) -> Result<()> {
    let inst = match &args.input {
        Some(path) => {
            if args.generator.any_set() {
                return Err(CliError::Input(
                    "--input cannot be combined with generator flags".into(),
                ));
            }
            CsInstance::from_json(&read_text(path)?)?
        }
        None => generate(&args.generator)?,
    };
    let cfg = args.solver.config();
    let timing = !args.solver.no_timing;
    let (trial, report, failed) = cs_trial(&inst, args.margin, args.solver.method, &cfg, timing)?;
    if failed {
        return Err(CliError::Solver(format!(
            "Newton direction failed at iteration {}",
            report.iterations
        )));
    }
    save_point(args.out.save_point.as_deref(), &report)?;
    let method = args.solver.method.name();
    let text = match args.out.format {
        Format::Json => to_json(&CsReport {
            method,
            n: inst.n,
            m: inst.m,
            k: inst.k_star,
            flip: inst.flip_ratio,
            seed: inst.seed,
            snr: trial.snr,
            hd: trial.hd,
            he: trial.he,
            acc: trial.acc,
            iterations: report.iterations,
            termination: report.termination,
            final_residual: report.final_residual,
            final_s: report.final_s,
            time_secs: timing.then_some(report.wall_time_secs),
        }),
        Format::Csv => {
            let agg = aggregate(&[trial]).expect("one trial");
            format!(
                "{CSV_HEADER}\n{}\n",
                csv_row(method, inst.n, inst.m, inst.k_star, inst.flip_ratio, &agg)
            )
        }
    };
    emit(args.out.output.as_deref(), &text)
}

pub fn verify(args: &VerifyArgs) -> Result<()> {
    let problem = if let Some(path) = &args.instance {
        let inst = CsInstance::from_json(&read_text(path)?)?;
        let params = CsModelParams {
            epsilon: args.margin,
            ..CsModelParams::defaults_for(inst.n)
        };
        build_cs_problem(&Matrix::Dense(inst.a0), &inst.c, args.s, params)?
    } else {
        let path = args.train.as_ref().expect("clap requires --instance or --train");
        let ds = scale_and_augment(&read_libsvm(path)?);
        build_svm_problem(&ds.samples, &ds.labels, args.s, args.d_last)?
    };
    let point: Iterate = serde_json::from_str(&read_text(&args.point)?)
        .map_err(|e| CliError::Input(format!("{}: {e}", args.point.display())))?;
    let point = Iterate::new(point.x, point.lambda, point.tau)?;
    let report = verify_stationary(&problem, &point, args.tol)?;
    emit(args.output.as_deref(), &to_json(&report))
}

pub fn gen(args: &GenArgs) -> Result<()> {
    let inst = generate(&args.generator)?;
    let mut text = inst.to_json();
    text.push('\n');
    emit(args.output.as_deref(), &text)
}

fn parse_grid(grid: &str) -> Result<Vec<usize>> {
    let bad = || CliError::Input(format!("--grid expects n=<size>[,<size>...], got '{grid}'"));
    let values = grid.trim().strip_prefix("n=").ok_or_else(bad)?;
    values
        .split(',')
        .map(|v| v.trim().parse::<usize>().ok().filter(|n| *n > 0).ok_or_else(bad))
        .collect()
}

fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("HSCO_THREADS") {
        let n = v
            .parse::<usize>()
            .ok()
            .filter(|n| *n >= 1)
            .ok_or_else(|| CliError::Input(format!("HSCO_THREADS must be a positive integer, got '{v}'")))?;
        builder = builder.num_threads(n);
    }
    builder.build().map_err(|e| CliError::Input(e.to_string()))
}

#[derive(Serialize)]
struct BenchRow {
    method: &'static str,
    n: usize,
    m: usize,
    k: usize,
    flip: f64,
    #[serde(flatten)]
    aggregate: Aggregate,
}

pub fn bench(args: &BenchArgs) -> Result<()> {
    if args.trials == 0 {
        return Err(CliError::Input("--trials must be at least 1".into()));
    }
    let sizes = parse_grid(&args.grid)?;
    let cfg = args.solver.config();
    cfg.validate().map_err(CliError::from)?;
    let timing = !args.solver.no_timing;
    let method = args.solver.method;
    let pool = thread_pool()?;
    let mut rows = Vec::new();
    let mut failures = 0;
    for n in sizes {
        let (m, k) = (ratio_ceil(args.m_ratio, n), ratio_ceil(args.k_ratio, n));
        // Ordered collect: results line up with seeds regardless of which
        // worker finishes first.
        let trials: Vec<Result<(TrialResult, SolveReport, bool)>> = pool.install(|| {
            (0..args.trials as u64)
                .into_par_iter()
                .map(|t| {
                    let inst = generate_cs_instance(n, m, k, args.flip, args.cov.into(), args.seed + t)?;
                    cs_trial(&inst, args.margin, method, &cfg, timing)
                })
                .collect()
        });
        let mut results = Vec::with_capacity(trials.len());
        for t in trials {
            let (r, _, failed) = t?;
            failures += failed as usize;
            results.push(r);
        }
        let agg = aggregate(&results).expect("trials >= 1");
        rows.push(BenchRow {
            method: method.name(),
            n,
            m,
            k,
            flip: args.flip,
            aggregate: agg,
        });
    }
    let text = match args.format {
        Format::Csv => {
            let mut s = format!("{CSV_HEADER}\n");
            for r in &rows {
                s.push_str(&csv_row(r.method, r.n, r.m, r.k, r.flip, &r.aggregate));
                s.push('\n');
            }
            s
        }
        Format::Json => to_json(&rows),
    };
    emit(args.output.as_deref(), &text)?;
    if failures > 0 {
        return Err(CliError::Solver(format!(
            "{failures} trials stopped on a failed Newton direction"
        )));
    }
    Ok(())
}
