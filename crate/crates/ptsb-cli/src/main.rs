use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ptsb_cli::config::{apply_config_file, apply_env, Mode, RunConfig};
use ptsb_cli::presets::apply_preset;
use ptsb_cli::runner::{run, RunError};

/// Spectrum, exceptional points and dynamics of the PT-symmetric
/// non-Hermitian spin-boson model.
#[derive(Parser)]
#[command(name = "ptsb", version, about)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Dump a discretized bath as CSV (n, omega, g) at full precision.
    Bath(JobArgs),
    /// Sweep the eigenvalue spectrum over lambda or eps and locate the EP.
    Spectrum(JobArgs),
    /// Integrate the variational equations of motion and record observables.
    Dynamics(JobArgs),
    /// Overlay projection-method eigenvalues against exact diagonalization.
    Validate(JobArgs),
}

#[derive(Args)]
struct JobArgs {
    /// Flat key=value configuration file with [section] headers.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Named figure preset (fig1a..fig7b); flags still override.
    #[arg(long)]
    preset: Option<String>,

    // model
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    /// imaginary | real
    #[arg(long)]
    bias: Option<String>,
    #[arg(long)]
    s: Option<f64>,
    #[arg(long)]
    omega_c: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,

    // bath
    /// wilson | uniform | linear | single
    #[arg(long)]
    scheme: Option<String>,
    /// Logarithmic discretization parameter Λ.
    #[arg(long)]
    lambda_disc: Option<f64>,
    #[arg(long)]
    modes: Option<usize>,
    #[arg(long)]
    omega_max: Option<f64>,
    #[arg(long)]
    omega_1: Option<f64>,
    #[arg(long)]
    omega_m: Option<f64>,
    #[arg(long)]
    omega_0: Option<f64>,

    // spectrum
    /// lambda | eps
    #[arg(long)]
    axis: Option<String>,
    #[arg(long)]
    grid_min: Option<f64>,
    #[arg(long)]
    grid_max: Option<f64>,
    #[arg(long)]
    grid_count: Option<usize>,
    /// Solver residual tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// |Im E| threshold for the broken phase.
    #[arg(long)]
    delta_ep: Option<f64>,
    /// Absolute EP bisection width target.
    #[arg(long)]
    ep_width: Option<f64>,
    /// Track the two lowest branches (finite-mode style).
    #[arg(long)]
    two_branches: bool,

    // dynamics
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long)]
    rtol: Option<f64>,
    #[arg(long)]
    atol: Option<f64>,
    /// Observable sampling interval.
    #[arg(long)]
    stride: Option<f64>,
    /// Regularization floor for the initial spin-down amplitude.
    #[arg(long)]
    reg_floor: Option<f64>,
    /// Use the full-scale bath (M = 20,000) instead of the desk default.
    #[arg(long)]
    full_scale: bool,

    // validate
    /// single | m3 | m5
    #[arg(long)]
    case: Option<String>,
    #[arg(long)]
    n_max: Option<usize>,

    // output
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    basename: Option<String>,
    #[arg(long)]
    workers: Option<usize>,
}

fn resolve(mode: Mode, args: &JobArgs) -> Result<RunConfig, RunError> {
    let mut cfg = RunConfig::defaults(mode);
    if let Some(name) = &args.preset {
        apply_preset(&mut cfg, name)?;
    }
    if let Some(path) = &args.config {
        apply_config_file(&mut cfg, path)?;
    }
    apply_env(&mut cfg)?;

    let mut set = |section: &str, key: &str, value: Option<String>| -> Result<(), RunError> {
        if let Some(v) = value {
            cfg.apply(section, key, &v)?;
        }
        Ok(())
    };
    let s = |x: Option<f64>| x.map(|v| v.to_string());
    let u = |x: Option<usize>| x.map(|v| v.to_string());

    set("model", "delta", s(args.delta))?;
    set("model", "eps", s(args.eps))?;
    set("model", "bias", args.bias.clone())?;
    set("model", "s", s(args.s))?;
    set("model", "omega_c", s(args.omega_c))?;
    set("model", "lambda", s(args.lambda))?;
    set("bath", "scheme", args.scheme.clone())?;
    set("bath", "lambda_disc", s(args.lambda_disc))?;
    set("bath", "modes", u(args.modes))?;
    set("bath", "omega_max", s(args.omega_max))?;
    set("bath", "omega_1", s(args.omega_1))?;
    set("bath", "omega_m", s(args.omega_m))?;
    set("bath", "omega_0", s(args.omega_0))?;
    set("spectrum", "axis", args.axis.clone())?;
    set("spectrum", "grid_min", s(args.grid_min))?;
    set("spectrum", "grid_max", s(args.grid_max))?;
    set("spectrum", "grid_count", u(args.grid_count))?;
    set("spectrum", "tol", s(args.tol))?;
    set("spectrum", "delta_ep", s(args.delta_ep))?;
    set("spectrum", "ep_abs_width", s(args.ep_width))?;
    set("dynamics", "t_end", s(args.t_end))?;
    set("dynamics", "rtol", s(args.rtol))?;
    set("dynamics", "atol", s(args.atol))?;
    set("dynamics", "stride", s(args.stride))?;
    set("dynamics", "reg_floor", s(args.reg_floor))?;
    set("validate", "case", args.case.clone())?;
    set("validate", "n_max", u(args.n_max))?;
    set("output", "basename", args.basename.clone())?;
    set("output", "workers", u(args.workers))?;
    if args.two_branches {
        cfg.two_branches = true;
    }
    if args.full_scale {
        cfg.full_scale = true;
    }
    // A single --eps on the command line overrides any preset pair.
    if args.eps.is_some() {
        cfg.eps_list.clear();
    }
    if let Some(out) = &args.out {
        cfg.out_dir = out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (mode, args) = match &cli.cmd {
        Cmd::Bath(a) => (Mode::Bath, a),
        Cmd::Spectrum(a) => (Mode::Spectrum, a),
        Cmd::Dynamics(a) => (Mode::Dynamics, a),
        Cmd::Validate(a) => (Mode::Validate, a),
    };
    let outcome = resolve(mode, args).and_then(|cfg| run(&cfg));
    match outcome {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                RunError::Config(_) => ExitCode::from(2),
                _ => ExitCode::from(3),
            }
        }
    }
}
