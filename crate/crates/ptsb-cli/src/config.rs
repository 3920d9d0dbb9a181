//! Run configuration: mode-specific defaults, flat key=value config files
//! with one section per subsystem, and CLI flag overrides (flags take
//! precedence over file values, which take precedence over presets).

use std::path::PathBuf;

use ptsb::projection::SweepAxis;
use ptsb::{BiasKind, ModelParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Bath,
    Spectrum,
    Dynamics,
    Validate,
}

impl Mode {
    pub fn label(self) -> &'static str {
        match self {
            Mode::Bath => "bath",
            Mode::Spectrum => "spectrum",
            Mode::Dynamics => "dynamics",
            Mode::Validate => "validate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeKind {
    Wilson,
    Uniform,
    Linear,
    Single,
}

impl SchemeKind {
    pub fn label(self) -> &'static str {
        match self {
            SchemeKind::Wilson => "wilson",
            SchemeKind::Uniform => "uniform",
            SchemeKind::Linear => "linear",
            SchemeKind::Single => "single",
        }
    }
}

/// Benchmark family for the `validate` mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValidateCase {
    /// Single mode, ω0 = 1 (Fock cutoff 40).
    SingleMode,
    /// Three equally spaced modes on [1, 1.4] (cutoff 8).
    LinearM3,
    /// Five equally spaced modes on [1, 1.4] (cutoff 6).
    LinearM5,
}

impl ValidateCase {
    pub fn label(self) -> &'static str {
        match self {
            ValidateCase::SingleMode => "single",
            ValidateCase::LinearM3 => "m3",
            ValidateCase::LinearM5 => "m5",
        }
    }

    pub fn default_n_max(self) -> usize {
        match self {
            ValidateCase::SingleMode => 40,
            ValidateCase::LinearM3 => 8,
            ValidateCase::LinearM5 => 6,
        }
    }

    pub fn mode_count(self) -> usize {
        match self {
            ValidateCase::SingleMode => 1,
            ValidateCase::LinearM3 => 3,
            ValidateCase::LinearM5 => 5,
        }
    }

    pub fn convergence_bump(self) -> usize {
        match self {
            ValidateCase::SingleMode => 10,
            _ => 2,
        }
    }
}

/// Fully resolved run configuration; every field is either set explicitly
/// or filled from the documented defaults, and the whole struct is echoed
/// into the JSON sidecar.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub mode: Mode,
    // model
    pub delta: f64,
    pub eps: f64,
    pub bias: BiasKind,
    pub s: f64,
    pub omega_c: f64,
    pub lambda: f64,
    // bath
    pub scheme: SchemeKind,
    pub lambda_disc: f64,
    pub modes: usize,
    pub omega_max: f64,
    pub omega_1: f64,
    pub omega_m: f64,
    pub omega_0: f64,
    // spectrum
    pub axis: SweepAxis,
    pub grid_min: f64,
    pub grid_max: f64,
    pub grid_count: usize,
    pub tol: f64,
    pub delta_ep: f64,
    pub ep_abs_width: Option<f64>,
    pub two_branches: bool,
    // dynamics
    pub eps_list: Vec<f64>,
    pub t_end: f64,
    pub rtol: f64,
    pub atol: f64,
    pub stride: f64,
    pub reg_floor: f64,
    pub full_scale: bool,
    // validate
    pub cases: Vec<ValidateCase>,
    pub n_max: Option<usize>,
    // output
    pub out_dir: PathBuf,
    pub basename: String,
    pub workers: usize,
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

type CResult<T> = Result<T, ConfigError>;

fn err<T>(msg: impl Into<String>) -> CResult<T> {
    Err(ConfigError(msg.into()))
}

impl RunConfig {
    /// Documented defaults per mode. Spectrum modes default to the
    /// logarithmic bath (Λ = 1.2, M = 80); dynamics defaults to the
    /// desk-scale homogeneous bath (M = 2000, ω_max = 4) at the weak
    /// coupling parameter point Δ = 0.1, λ = 0.01, ε = 0.05.
    pub fn defaults(mode: Mode) -> Self {
        let base = Self {
            mode,
            delta: 0.3,
            eps: 0.1,
            bias: BiasKind::Imaginary,
            s: 1.0,
            omega_c: 1.0,
            lambda: 0.1,
            scheme: SchemeKind::Wilson,
            lambda_disc: 1.2,
            modes: 80,
            omega_max: 4.0,
            omega_1: 1.0,
            omega_m: 1.4,
            omega_0: 1.0,
            axis: SweepAxis::Lambda,
            grid_min: 0.0,
            grid_max: 1.0,
            grid_count: 51,
            tol: 1e-10,
            delta_ep: 1e-6,
            ep_abs_width: None,
            two_branches: false,
            eps_list: Vec::new(),
            t_end: 200.0,
            rtol: 1e-8,
            atol: 1e-10,
            stride: 0.1,
            reg_floor: 1e-8,
            full_scale: false,
            cases: vec![ValidateCase::SingleMode],
            n_max: None,
            out_dir: PathBuf::from("."),
            basename: mode.label().to_string(),
            workers: 1,
        };
        match mode {
            Mode::Dynamics => Self {
                delta: 0.1,
                eps: 0.05,
                lambda: 0.01,
                scheme: SchemeKind::Uniform,
                modes: 2000,
                ..base
            },
            Mode::Validate => Self {
                delta: 0.5,
                eps: 0.1,
                grid_max: 1.15,
                grid_count: 50,
                two_branches: true,
                ..base
            },
            _ => base,
        }
    }

    /// Apply one `section.key = value` assignment; unknown keys and
    /// malformed values are rejected by name.
    pub fn apply(&mut self, section: &str, key: &str, value: &str) -> CResult<()> {
        let fail = |what: &str| -> ConfigError {
            ConfigError(format!("invalid value `{value}` for {section}.{key}: expected {what}"))
        };
        let f = |v: &str| v.parse::<f64>().map_err(|_| fail("a number"));
        let u = |v: &str| v.parse::<usize>().map_err(|_| fail("a non-negative integer"));
        let b = |v: &str| match v {
            "true" | "yes" | "1" => Ok(true),
            "false" | "no" | "0" => Ok(false),
            _ => Err(fail("a boolean")),
        };
        match (section, key) {
            ("model", "delta") => self.delta = f(value)?,
            ("model", "eps") => self.eps = f(value)?,
            ("model", "bias") => {
                self.bias = match value {
                    "imaginary" => BiasKind::Imaginary,
                    "real" => BiasKind::Real,
                    _ => return err(format!("unknown bias `{value}` (imaginary|real)")),
                }
            }
            ("model", "s") => self.s = f(value)?,
            ("model", "omega_c") => self.omega_c = f(value)?,
            ("model", "lambda") => self.lambda = f(value)?,
            ("bath", "scheme") => {
                self.scheme = match value {
                    "wilson" => SchemeKind::Wilson,
                    "uniform" => SchemeKind::Uniform,
                    "linear" => SchemeKind::Linear,
                    "single" => SchemeKind::Single,
                    _ => return err(format!(
                        "unknown scheme `{value}` (wilson|uniform|linear|single)"
                    )),
                }
            }
            ("bath", "lambda_disc") => self.lambda_disc = f(value)?,
            ("bath", "modes") => self.modes = u(value)?,
            ("bath", "omega_max") => self.omega_max = f(value)?,
            ("bath", "omega_1") => self.omega_1 = f(value)?,
            ("bath", "omega_m") => self.omega_m = f(value)?,
            ("bath", "omega_0") => self.omega_0 = f(value)?,
            ("spectrum", "axis") => {
                self.axis = match value {
                    "lambda" => SweepAxis::Lambda,
                    "eps" => SweepAxis::Eps,
                    _ => return err(format!("unknown axis `{value}` (lambda|eps)")),
                }
            }
            ("spectrum", "grid_min") => self.grid_min = f(value)?,
            ("spectrum", "grid_max") => self.grid_max = f(value)?,
            ("spectrum", "grid_count") => self.grid_count = u(value)?,
            ("spectrum", "tol") => self.tol = f(value)?,
            ("spectrum", "delta_ep") => self.delta_ep = f(value)?,
            ("spectrum", "ep_abs_width") => self.ep_abs_width = Some(f(value)?),
            ("spectrum", "two_branches") => self.two_branches = b(value)?,
            ("dynamics", "t_end") => self.t_end = f(value)?,
            ("dynamics", "rtol") => self.rtol = f(value)?,
            ("dynamics", "atol") => self.atol = f(value)?,
            ("dynamics", "stride") => self.stride = f(value)?,
            ("dynamics", "reg_floor") => self.reg_floor = f(value)?,
            ("dynamics", "full_scale") => self.full_scale = b(value)?,
            ("validate", "case") => {
                self.cases = vec![match value {
                    "single" | "fig5" => ValidateCase::SingleMode,
                    "m3" => ValidateCase::LinearM3,
                    "m5" => ValidateCase::LinearM5,
                    _ => return err(format!("unknown case `{value}` (single|m3|m5)")),
                }]
            }
            ("validate", "n_max") => self.n_max = Some(u(value)?),
            ("output", "dir") => self.out_dir = PathBuf::from(value),
            ("output", "basename") => self.basename = value.to_string(),
            ("output", "workers") => self.workers = u(value)?,
            _ => return err(format!("unknown key `{section}.{key}`")),
        }
        Ok(())
    }

    /// Cross-field validation mirroring the library's own domain checks so
    /// misconfiguration is reported before any computation starts.
    pub fn validate(&self) -> CResult<()> {
        self.model_params()
            .map_err(|e| ConfigError(e.to_string()))?;
        if self.mode == Mode::Spectrum || self.mode == Mode::Validate {
            if self.grid_count < 2 {
                return err("spectrum.grid_count must be at least 2");
            }
            if !(self.grid_max > self.grid_min) {
                return err("spectrum.grid_max must exceed spectrum.grid_min");
            }
            if matches!(self.axis, SweepAxis::Lambda) && self.grid_min < 0.0 {
                return err("lambda grid must be non-negative");
            }
            if matches!(self.axis, SweepAxis::Eps) && self.grid_min < 0.0 {
                return err("eps grid must be non-negative");
            }
        }
        if self.mode == Mode::Dynamics {
            if !(self.t_end > 0.0) {
                return err("dynamics.t_end must be positive");
            }
            if !(self.stride > 0.0) {
                return err("dynamics.stride must be positive");
            }
        }
        if self.workers == 0 {
            return err("output.workers must be at least 1");
        }
        Ok(())
    }

    pub fn model_params(&self) -> ptsb::error::Result<ModelParams> {
        ModelParams {
            delta: self.delta,
            eps: self.eps,
            bias: self.bias,
            s: self.s,
            omega_c: self.omega_c,
            lambda: self.lambda,
        }
        .validated()
    }

    /// Mode count for dynamics, honoring the full-scale flag.
    pub fn dynamics_modes(&self) -> usize {
        if self.full_scale {
            20_000
        } else {
            self.modes
        }
    }

    /// ε values a dynamics run covers (the single `eps` unless a preset
    /// supplied a list).
    pub fn dynamics_eps_values(&self) -> Vec<f64> {
        if self.eps_list.is_empty() {
            vec![self.eps]
        } else {
            self.eps_list.clone()
        }
    }
}

/// Parse the flat `key = value` format with `[section]` headers. Comments
/// start with `#`; blank lines are skipped.
pub fn parse_config_text(text: &str) -> CResult<Vec<(String, String, String)>> {
    let mut section = String::new();
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            section = name.trim().to_string();
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return err(format!("line {}: expected `key = value`, got `{line}`", lineno + 1));
        };
        if section.is_empty() {
            return err(format!("line {}: key outside any [section]", lineno + 1));
        }
        out.push((
            section.clone(),
            key.trim().to_string(),
            value.trim().to_string(),
        ));
    }
    Ok(out)
}

/// Load and apply a config file onto a base configuration.
pub fn apply_config_file(cfg: &mut RunConfig, path: &std::path::Path) -> CResult<()> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
    for (section, key, value) in parse_config_text(&text)? {
        cfg.apply(&section, &key, &value)?;
    }
    Ok(())
}

/// Environment overrides: worker count and output directory.
pub fn apply_env(cfg: &mut RunConfig) -> CResult<()> {
    if let Ok(v) = std::env::var("PTSB_WORKERS") {
        cfg.workers = v
            .parse()
            .map_err(|_| ConfigError(format!("PTSB_WORKERS must be an integer, got `{v}`")))?;
    }
    if let Ok(v) = std::env::var("PTSB_OUTDIR") {
        cfg.out_dir = PathBuf::from(v);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_per_mode() {
        let s = RunConfig::defaults(Mode::Spectrum);
        assert_eq!(s.lambda_disc, 1.2);
        assert_eq!(s.modes, 80);
        let d = RunConfig::defaults(Mode::Dynamics);
        assert_eq!(d.modes, 2000);
        assert_eq!(d.delta, 0.1);
        assert_eq!(d.eps, 0.05);
        assert_eq!(d.lambda, 0.01);
    }

    #[test]
    fn unknown_key_is_rejected_by_name() {
        let mut cfg = RunConfig::defaults(Mode::Spectrum);
        let e = cfg.apply("spectrum", "grid_pints", "7").unwrap_err();
        assert!(e.0.contains("grid_pints"), "{e}");
    }

    #[test]
    fn type_mismatch_names_the_key() {
        let mut cfg = RunConfig::defaults(Mode::Spectrum);
        let e = cfg.apply("model", "delta", "three").unwrap_err();
        assert!(e.0.contains("model.delta"), "{e}");
    }

    #[test]
    fn negative_lambda_is_a_range_error() {
        let mut cfg = RunConfig::defaults(Mode::Spectrum);
        cfg.apply("model", "lambda", "-0.1").unwrap();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn parse_sections_and_comments() {
        let text = "# comment\n[model]\ndelta = 0.25 # inline\n\n[bath]\nscheme = uniform\n";
        let kvs = parse_config_text(text).unwrap();
        assert_eq!(
            kvs,
            vec![
                ("model".into(), "delta".into(), "0.25".into()),
                ("bath".into(), "scheme".into(), "uniform".into()),
            ]
        );
    }

    #[test]
    fn key_outside_section_is_rejected() {
        assert!(parse_config_text("delta = 1\n").is_err());
    }
}
