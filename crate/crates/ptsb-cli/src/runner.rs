//! Dispatch from a resolved configuration to library calls and artifacts.
//!
//! Independent parameter points (the ε values of a dynamics pair, the
//! cases of a validation run) form a job list processed on a worker pool;
//! each job writes its own CSV/JSON pair atomically, so output files are
//! deterministic for any worker count and byte-identical for workers = 1.

use std::path::PathBuf;

use num_complex::Complex64;
use rayon::prelude::*;
use serde_json::{json, Value};

use ptsb::ed::{
    build_hamiltonian, conjugate_closure_defect, diagonalize, diagonalize_converged,
    pt_symmetry_check, DiagOptions, FockTruncation,
};
use ptsb::error::PtsbError;
use ptsb::projection::{linear_grid, BathSpec, EpOutcome, SweepAxis, SweepOptions, Sweeper};
use ptsb::tdvp::{integrate, DynState, IntegrateOptions};
use ptsb::{BiasKind, DiscreteBath, ModelParams};

use crate::config::{ConfigError, Mode, RunConfig, SchemeKind, ValidateCase};
use crate::output::{emit, fmt_f64, fmt_f64_full, Csv};

#[derive(Debug)]
pub enum RunError {
    Config(ConfigError),
    Numerical(String),
    Io(std::io::Error),
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Config(e) => write!(f, "{e}"),
            RunError::Numerical(msg) => write!(f, "numerical failure: {msg}"),
            RunError::Io(e) => write!(f, "io error: {e}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e)
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Io(e)
    }
}

type RResult<T> = Result<T, RunError>;

fn numerical(context: impl std::fmt::Display, e: PtsbError) -> RunError {
    RunError::Numerical(format!("{context}: {e}"))
}

/// Execute a fully resolved configuration; returns the artifact paths.
pub fn run(cfg: &RunConfig) -> RResult<Vec<PathBuf>> {
    cfg.validate()?;
    match cfg.mode {
        Mode::Bath => run_bath(cfg),
        Mode::Spectrum => run_spectrum(cfg),
        Mode::Dynamics => run_dynamics(cfg),
        Mode::Validate => run_validate(cfg),
    }
}

fn bias_label(b: BiasKind) -> &'static str {
    b.label()
}

/// The resolved configuration, echoed into every sidecar.
fn config_json(cfg: &RunConfig) -> Value {
    json!({
        "mode": cfg.mode.label(),
        "model": {
            "delta": cfg.delta,
            "eps": cfg.eps,
            "bias": bias_label(cfg.bias),
            "s": cfg.s,
            "omega_c": cfg.omega_c,
            "lambda": cfg.lambda,
        },
        "bath": {
            "scheme": cfg.scheme.label(),
            "lambda_disc": cfg.lambda_disc,
            "modes": cfg.modes,
            "omega_max": cfg.omega_max,
            "omega_1": cfg.omega_1,
            "omega_m": cfg.omega_m,
            "omega_0": cfg.omega_0,
        },
        "spectrum": {
            "axis": cfg.axis.label(),
            "grid_min": cfg.grid_min,
            "grid_max": cfg.grid_max,
            "grid_count": cfg.grid_count,
            "tol": cfg.tol,
            "delta_ep": cfg.delta_ep,
            "ep_abs_width": cfg.ep_abs_width,
            "two_branches": cfg.two_branches,
        },
        "dynamics": {
            "eps_values": cfg.dynamics_eps_values(),
            "t_end": cfg.t_end,
            "rtol": cfg.rtol,
            "atol": cfg.atol,
            "stride": cfg.stride,
            "reg_floor": cfg.reg_floor,
            "full_scale": cfg.full_scale,
            "modes": cfg.dynamics_modes(),
        },
        "validate": {
            "cases": cfg.cases.iter().map(|c| c.label()).collect::<Vec<_>>(),
            "n_max": cfg.n_max,
        },
        "output": {
            "dir": cfg.out_dir.display().to_string(),
            "basename": cfg.basename,
            "workers": cfg.workers,
        },
    })
}

fn build_bath(cfg: &RunConfig, p: &ModelParams) -> Result<DiscreteBath, PtsbError> {
    match cfg.scheme {
        SchemeKind::Wilson => ptsb::discretize_wilson(p, cfg.lambda_disc, cfg.modes),
        SchemeKind::Uniform => ptsb::discretize_uniform(p, cfg.modes, cfg.omega_max),
        SchemeKind::Linear => {
            ptsb::discretize_linear_finite(p, cfg.modes, cfg.omega_1, cfg.omega_m)
        }
        SchemeKind::Single => ptsb::single_mode(cfg.omega_0, p.lambda),
    }
}

fn bath_spec(cfg: &RunConfig) -> BathSpec {
    match cfg.scheme {
        SchemeKind::Wilson => BathSpec::Wilson {
            lambda_disc: cfg.lambda_disc,
            m: cfg.modes,
        },
        SchemeKind::Uniform => BathSpec::Uniform {
            m: cfg.modes,
            omega_max: cfg.omega_max,
        },
        SchemeKind::Linear => BathSpec::LinearFinite {
            m: cfg.modes,
            omega_1: cfg.omega_1,
            omega_m: cfg.omega_m,
        },
        SchemeKind::Single => BathSpec::SingleMode { omega_0: cfg.omega_0 },
    }
}

fn run_bath(cfg: &RunConfig) -> RResult<Vec<PathBuf>> {
    let p = cfg.model_params().map_err(|e| numerical("model", e))?;
    let bath = build_bath(cfg, &p).map_err(|e| numerical("bath build", e))?;
    let mut csv = Csv::new("n,omega,g");
    for (n, mode) in bath.modes().iter().enumerate() {
        csv.row(&[
            (n + 1).to_string(),
            fmt_f64_full(mode.omega),
            fmt_f64_full(mode.g),
        ]);
    }
    let sidecar = json!({
        "config": config_json(cfg),
        "scheme": bath.scheme().label(),
        "cutoff": bath.cutoff().label(),
        "mode_count": bath.len(),
        "sum_g_sq": bath.sum_g_sq(),
        "recurrence_time": bath.recurrence_time(),
    });
    let (c, j) = emit(&cfg.out_dir, &cfg.basename, &csv, &sidecar)?;
    Ok(vec![c, j])
}

fn sweeper(cfg: &RunConfig) -> RResult<Sweeper> {
    let p = cfg.model_params().map_err(|e| numerical("model", e))?;
    let mut opts = SweepOptions::default();
    opts.solve.tol = cfg.tol;
    opts.delta_ep = cfg.delta_ep;
    opts.ep_abs_width = cfg.ep_abs_width;
    Ok(Sweeper::new(p, bath_spec(cfg), cfg.axis).with_options(opts))
}

fn ep_json(outcome: &EpOutcome) -> Value {
    match outcome {
        EpOutcome::Found(ep) => json!({
            "found": true,
            "axis": ep.axis.label(),
            "x_lo": ep.x_lo,
            "x_hi": ep.x_hi,
            "x_star": ep.x_star,
            "detection": ep.detection,
            "slope_gap": ep.slope_gap,
            "midpoint_failures": ep.midpoint_failures,
        }),
        EpOutcome::NoCrossing => json!({ "found": false }),
    }
}

fn run_spectrum(cfg: &RunConfig) -> RResult<Vec<PathBuf>> {
    let sweeper = sweeper(cfg)?;
    let grid = linear_grid(cfg.grid_min, cfg.grid_max, cfg.grid_count);
    let axis = cfg.axis.label();
    let sweep = if cfg.two_branches {
        sweeper.run_two_branches(&grid)
    } else {
        sweeper.run(&grid)
    }
    .map_err(|e| numerical(format!("{axis}-sweep"), e))?;
    let ep = sweeper
        .detect_ep(&sweep)
        .map_err(|e| numerical("ep detection", e))?;

    let mut csv = Csv::new("x,re_E,im_E,branch,residual,converged");
    for pt in &sweep.points {
        csv.row(&[
            fmt_f64(pt.x),
            fmt_f64(pt.energy.re),
            fmt_f64(pt.energy.im),
            pt.branch.to_string(),
            fmt_f64(pt.residual),
            pt.converged.to_string(),
        ]);
    }
    let converged = sweep.points.iter().filter(|p| p.converged).count();
    let sidecar = json!({
        "config": config_json(cfg),
        "ep": ep_json(&ep),
        "points": sweep.points.len(),
        "converged_points": converged,
    });
    let (c, j) = emit(&cfg.out_dir, &cfg.basename, &csv, &sidecar)?;
    Ok(vec![c, j])
}

fn run_dynamics(cfg: &RunConfig) -> RResult<Vec<PathBuf>> {
    let eps_values = cfg.dynamics_eps_values();
    let multi = eps_values.len() > 1;
    let jobs: Vec<(String, f64)> = eps_values
        .into_iter()
        .map(|eps| {
            let stem = if multi {
                format!("{}_eps{}", cfg.basename, fmt_f64(eps))
            } else {
                cfg.basename.clone()
            };
            (stem, eps)
        })
        .collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| RunError::Numerical(format!("worker pool: {e}")))?;
    let results: Vec<RResult<Vec<PathBuf>>> = pool.install(|| {
        jobs.par_iter()
            .map(|(stem, eps)| dynamics_job(cfg, stem, *eps))
            .collect()
    });
    flatten(results)
}

fn dynamics_job(cfg: &RunConfig, stem: &str, eps: f64) -> RResult<Vec<PathBuf>> {
    let p = ModelParams {
        delta: cfg.delta,
        eps,
        bias: cfg.bias,
        s: cfg.s,
        omega_c: cfg.omega_c,
        lambda: cfg.lambda,
    }
    .validated()
    .map_err(|e| numerical(format!("eps={eps}"), e))?;
    let modes = cfg.dynamics_modes();
    let bath = ptsb::discretize_uniform(&p, modes, cfg.omega_max)
        .map_err(|e| numerical(format!("eps={eps} bath"), e))?;
    let init = DynState::polarized_up(modes, cfg.reg_floor);
    let opts = IntegrateOptions {
        ctrl: ptsb::ode::StepControl {
            rtol: cfg.rtol,
            atol: cfg.atol,
            ..Default::default()
        },
        sample_dt: cfg.stride,
        reg_floor: cfg.reg_floor,
        ..Default::default()
    };
    let traj = integrate(&p, &bath, &init, cfg.t_end, &opts)
        .map_err(|e| numerical(format!("eps={eps} integration"), e))?;

    let mut csv = Csv::new("t,s_z,n_b,log_norm,re_H_over_N,im_H_over_N,dnorm_residual");
    for row in &traj.rows {
        csv.row(&[
            fmt_f64(row.t),
            fmt_f64(row.s_z),
            fmt_f64(row.n_b),
            fmt_f64(row.log_norm),
            fmt_f64(row.re_h_over_n),
            fmt_f64(row.im_h_over_n),
            fmt_f64(row.dnorm_residual),
        ]);
    }
    let sidecar = json!({
        "config": config_json(cfg),
        "eps": eps,
        "integrator": {
            "steps_accepted": traj.stats.steps_accepted,
            "steps_rejected": traj.stats.steps_rejected,
            "rhs_evaluations": traj.stats.rhs_evaluations,
            "rescales": traj.stats.rescales,
            "amplitude_floor_hits": traj.stats.amplitude_floor_hits,
        },
        "recurrence_time": traj.recurrence_time,
        "recurrence_exceeded": traj.recurrence_exceeded,
        "reg_floor": traj.reg_floor,
        "cutoff": "exponential",
        "samples": traj.rows.len(),
    });
    let (c, j) = emit(&cfg.out_dir, stem, &csv, &sidecar)?;
    Ok(vec![c, j])
}

fn run_validate(cfg: &RunConfig) -> RResult<Vec<PathBuf>> {
    let multi = cfg.cases.len() > 1;
    let jobs: Vec<(String, ValidateCase)> = cfg
        .cases
        .iter()
        .map(|&case| {
            let stem = if multi {
                format!("{}_{}", cfg.basename, case.label())
            } else {
                cfg.basename.clone()
            };
            (stem, case)
        })
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| RunError::Numerical(format!("worker pool: {e}")))?;
    let results: Vec<RResult<Vec<PathBuf>>> = pool.install(|| {
        jobs.par_iter()
            .map(|(stem, case)| validate_job(cfg, stem, *case))
            .collect()
    });
    flatten(results)
}

/// One validation case: overlay the lowest two eigenvalues from the
/// projection method and exact diagonalization across a λ grid.
fn validate_job(cfg: &RunConfig, stem: &str, case: ValidateCase) -> RResult<Vec<PathBuf>> {
    let p = ModelParams {
        delta: cfg.delta,
        eps: cfg.eps,
        bias: cfg.bias,
        s: cfg.s,
        omega_c: cfg.omega_c,
        lambda: 0.0,
    }
    .validated()
    .map_err(|e| numerical("model", e))?;
    let grid = linear_grid(cfg.grid_min, cfg.grid_max, cfg.grid_count);
    let spec = match case {
        ValidateCase::SingleMode => BathSpec::SingleMode { omega_0: cfg.omega_0 },
        ValidateCase::LinearM3 => BathSpec::LinearFinite {
            m: 3,
            omega_1: cfg.omega_1,
            omega_m: cfg.omega_m,
        },
        ValidateCase::LinearM5 => BathSpec::LinearFinite {
            m: 5,
            omega_1: cfg.omega_1,
            omega_m: cfg.omega_m,
        },
    };
    let mut opts = SweepOptions::default();
    opts.solve.tol = cfg.tol;
    opts.delta_ep = cfg.delta_ep;
    let sweeper = Sweeper::new(p, spec, SweepAxis::Lambda).with_options(opts);
    let sweep = sweeper
        .run_two_branches(&grid)
        .map_err(|e| numerical(format!("{} projection sweep", case.label()), e))?;

    let n_max = cfg.n_max.unwrap_or_else(|| case.default_n_max());
    let trunc = FockTruncation::uniform(n_max, case.mode_count());
    let diag_opts = DiagOptions {
        // The multi-mode matrices converge much faster through the Krylov
        // path than a dense factorization at these dimensions.
        dense_threshold: if case == ValidateCase::SingleMode { 2000 } else { 400 },
        ..Default::default()
    };

    let mut ed_rows: Vec<[Complex64; 2]> = Vec::with_capacity(grid.len());
    let mut seed: Option<Vec<Complex64>> = None;
    let mut max_pt_defect = 0.0f64;
    let mut max_closure = 0.0f64;
    for &x in &grid {
        let px = p
            .with_lambda(x)
            .map_err(|e| numerical(format!("lambda={x}"), e))?;
        let bath = sweeper
            .bath
            .build(&px)
            .map_err(|e| numerical(format!("lambda={x} bath"), e))?;
        let h = build_hamiltonian(&px, &bath, &trunc)
            .map_err(|e| numerical(format!("lambda={x} build"), e))?;
        if px.bias == BiasKind::Imaginary {
            max_pt_defect = max_pt_defect.max(pt_symmetry_check(&h));
        }
        let opts_here = DiagOptions {
            seed: seed.clone(),
            ..diag_opts.clone()
        };
        let ed = diagonalize(&h, 2, &opts_here)
            .map_err(|e| numerical(format!("lambda={x} diagonalize"), e))?;
        max_closure = max_closure.max(conjugate_closure_defect(&ed.eigenvalues));
        seed = ed.eigenvectors.as_ref().map(|v| {
            let mut s = v[0].clone();
            for (a, b) in s.iter_mut().zip(&v[1]) {
                *a += b;
            }
            s
        });
        ed_rows.push([ed.eigenvalues[0], ed.eigenvalues[1]]);
    }

    // Truncation convergence re-runs at the grid ends and middle.
    let mut convergence_delta = 0.0f64;
    for idx in [0usize, grid.len() / 2, grid.len() - 1] {
        let x = grid[idx];
        let px = p
            .with_lambda(x)
            .map_err(|e| numerical(format!("lambda={x}"), e))?;
        let bath = sweeper
            .bath
            .build(&px)
            .map_err(|e| numerical(format!("lambda={x} bath"), e))?;
        let spec = diagonalize_converged(
            &px,
            &bath,
            &trunc,
            2,
            case.convergence_bump(),
            1e-8,
            &diag_opts,
        )
        .map_err(|e| numerical(format!("lambda={x} convergence re-run"), e))?;
        convergence_delta = convergence_delta.max(spec.convergence_delta.unwrap_or(f64::NAN));
    }

    let mut csv = Csv::new("lambda,re_E0,im_E0,re_E1,im_E1,source");
    for (i, &x) in grid.iter().enumerate() {
        let e = &ed_rows[i];
        csv.row(&[
            fmt_f64(x),
            fmt_f64(e[0].re),
            fmt_f64(e[0].im),
            fmt_f64(e[1].re),
            fmt_f64(e[1].im),
            "ed".to_string(),
        ]);
    }
    for &x in &grid {
        let branch_energy = |b: usize| {
            sweep
                .points
                .iter()
                .find(|pt| pt.x == x && pt.branch == b)
                .map(|pt| pt.energy)
                .unwrap_or(Complex64::new(f64::NAN, f64::NAN))
        };
        let (e0, e1) = (branch_energy(0), branch_energy(1));
        csv.row(&[
            fmt_f64(x),
            fmt_f64(e0.re),
            fmt_f64(e0.im),
            fmt_f64(e1.re),
            fmt_f64(e1.im),
            "projection".to_string(),
        ]);
    }

    let sidecar = json!({
        "config": config_json(cfg),
        "case": case.label(),
        "n_max": n_max,
        "truncation_convergence_delta": convergence_delta,
        "max_pt_defect": max_pt_defect,
        "max_conjugate_closure": max_closure,
        "projection_nonconverged": sweep.points.iter().filter(|p| !p.converged).count(),
    });
    let (c, j) = emit(&cfg.out_dir, stem, &csv, &sidecar)?;
    Ok(vec![c, j])
}

fn flatten(results: Vec<RResult<Vec<PathBuf>>>) -> RResult<Vec<PathBuf>> {
    let mut all = Vec::new();
    for r in results {
        all.extend(r?);
    }
    Ok(all)
}
