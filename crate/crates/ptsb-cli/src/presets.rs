//! Named parameter presets covering every figure-style run the toolkit
//! reproduces: spectra versus λ or ε, dynamics pairs contrasting the
//! unbroken and broken phases, and the finite-mode validation overlays.

use ptsb::projection::SweepAxis;
use ptsb::BiasKind;

use crate::config::{ConfigError, Mode, RunConfig, SchemeKind, ValidateCase};

pub const PRESET_NAMES: &[&str] = &[
    "fig1a", "fig1b", "fig2a", "fig2b", "fig2c", "fig2d", "fig3a", "fig3b", "fig3c", "fig3d",
    "fig4a", "fig4b", "fig5", "fig6", "fig7a", "fig7b",
];

/// Expected mode for each preset (applying a dynamics preset to `spectrum`
/// is rejected rather than silently reinterpreted).
pub fn preset_mode(name: &str) -> Option<Mode> {
    Some(match name {
        "fig1a" | "fig1b" | "fig2a" | "fig2b" | "fig2c" | "fig2d" | "fig7a" => Mode::Spectrum,
        "fig3a" | "fig3b" | "fig3c" | "fig3d" | "fig4a" | "fig4b" | "fig7b" => Mode::Dynamics,
        "fig5" | "fig6" => Mode::Validate,
        _ => return None,
    })
}

pub fn apply_preset(cfg: &mut RunConfig, name: &str) -> Result<(), ConfigError> {
    let Some(mode) = preset_mode(name) else {
        return Err(ConfigError(format!(
            "unknown preset `{name}` (available: {})",
            PRESET_NAMES.join(", ")
        )));
    };
    if mode != cfg.mode {
        return Err(ConfigError(format!(
            "preset `{name}` belongs to the `{}` subcommand",
            mode.label()
        )));
    }
    let spectrum_eps_sweep = |cfg: &mut RunConfig, delta: f64, lambda: f64, hi: f64| {
        cfg.delta = delta;
        cfg.lambda = lambda;
        cfg.axis = SweepAxis::Eps;
        cfg.grid_min = 0.0;
        cfg.grid_max = hi;
        cfg.grid_count = 41;
        cfg.scheme = SchemeKind::Wilson;
    };
    let dynamics_pair = |cfg: &mut RunConfig, delta: f64, lambda: f64, eps: [f64; 2]| {
        cfg.delta = delta;
        cfg.lambda = lambda;
        cfg.eps_list = eps.to_vec();
        cfg.scheme = SchemeKind::Uniform;
    };
    match name {
        "fig1a" => {
            cfg.delta = 0.3;
            cfg.eps = 0.1;
            cfg.axis = SweepAxis::Lambda;
            cfg.grid_min = 0.0;
            cfg.grid_max = 1.0;
            cfg.grid_count = 51;
            cfg.scheme = SchemeKind::Wilson;
        }
        "fig1b" => {
            cfg.delta = 0.3;
            cfg.eps = 0.1;
            cfg.axis = SweepAxis::Lambda;
            cfg.grid_min = 0.0;
            cfg.grid_max = 1.0;
            cfg.grid_count = 51;
            cfg.scheme = SchemeKind::Single;
            cfg.two_branches = true;
        }
        "fig2a" => spectrum_eps_sweep(cfg, 0.1, 0.01, 0.2),
        "fig2b" => spectrum_eps_sweep(cfg, 0.1, 0.1, 0.2),
        "fig2c" => spectrum_eps_sweep(cfg, 0.3, 0.1, 0.4),
        "fig2d" => spectrum_eps_sweep(cfg, 0.3, 0.3, 0.4),
        "fig3a" | "fig4a" => dynamics_pair(cfg, 0.1, 0.01, [0.05, 0.1]),
        "fig3b" => dynamics_pair(cfg, 0.1, 0.1, [0.05, 0.1]),
        "fig3c" | "fig4b" => dynamics_pair(cfg, 0.3, 0.1, [0.1, 0.3]),
        "fig3d" => dynamics_pair(cfg, 0.3, 0.3, [0.1, 0.3]),
        "fig5" => {
            cfg.delta = 0.5;
            cfg.eps = 0.1;
            cfg.cases = vec![ValidateCase::SingleMode];
            cfg.grid_min = 0.0;
            cfg.grid_max = 1.15;
            cfg.grid_count = 50;
        }
        "fig6" => {
            cfg.delta = 0.3;
            cfg.eps = 0.1;
            cfg.cases = vec![ValidateCase::LinearM3, ValidateCase::LinearM5];
            cfg.grid_min = 0.0;
            cfg.grid_max = 0.65;
            cfg.grid_count = 50;
        }
        "fig7a" => {
            cfg.delta = 0.3;
            cfg.eps = 0.1;
            cfg.bias = BiasKind::Real;
            cfg.axis = SweepAxis::Lambda;
            cfg.grid_min = 0.0;
            cfg.grid_max = 1.0;
            cfg.grid_count = 51;
            cfg.scheme = SchemeKind::Wilson;
        }
        "fig7b" => {
            dynamics_pair(cfg, 0.1, 0.01, [0.05, 0.1]);
            cfg.bias = BiasKind::Real;
        }
        _ => unreachable!("preset_mode covers the names"),
    }
    cfg.basename = name.to_string();
    Ok(())
}
