//! Discretizations of the continuous bath onto finite mode lists.
//!
//! Three schemes are provided:
//!
//! - [`discretize_wilson`]: logarithmic partition of (0, ω_c] into intervals
//!   shrinking by Λ, one representative mode per interval. Used for spectral
//!   calculations (hard cutoff, closed forms exact).
//! - [`discretize_uniform`]: homogeneous grid ω_k = k·dω with couplings
//!   g_k² = J(ω_k)·dω and an exponential cutoff. Used for real-time
//!   dynamics; dω fixes the recurrence time T_p = 2π/dω.
//! - [`discretize_linear_finite`]: M equally spaced modes on [ω_1, ω_M] with
//!   g_n = √(λ ω_n / (M-1)), the finite multi-mode benchmark model.
//!
//! [`single_mode`] constructs the one-mode (quantum Rabi) bath directly from
//! (ω_0, g); there the coupling is g = λ itself, not √-scaled.

use crate::error::{PtsbError, Result};
use crate::model::{spectral_density, Cutoff, ModelParams};

/// One bath mode: frequency and coupling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BathMode {
    pub omega: f64,
    pub g: f64,
}

/// Which discretization produced a bath, with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum BathScheme {
    Wilson { lambda_disc: f64, m: usize },
    Uniform { m: usize, omega_max: f64 },
    LinearFinite { m: usize, omega_1: f64, omega_m: f64 },
    SingleMode { omega_0: f64 },
}

impl BathScheme {
    pub fn label(&self) -> &'static str {
        match self {
            BathScheme::Wilson { .. } => "wilson",
            BathScheme::Uniform { .. } => "uniform",
            BathScheme::LinearFinite { .. } => "linear_finite",
            BathScheme::SingleMode { .. } => "single_mode",
        }
    }
}

/// An ordered list of (ω_k, g_k) pairs plus the provenance of the scheme.
///
/// Modes are stored in the natural order of the scheme's index n (descending
/// frequencies for the logarithmic scheme, ascending otherwise); frequencies
/// are always strictly positive and pairwise distinct.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteBath {
    modes: Vec<BathMode>,
    scheme: BathScheme,
    /// Cutoff convention the couplings were drawn from.
    cutoff: Cutoff,
}

impl DiscreteBath {
    fn new(modes: Vec<BathMode>, scheme: BathScheme, cutoff: Cutoff) -> Result<Self> {
        for (k, mode) in modes.iter().enumerate() {
            if !(mode.omega > 0.0) || !mode.omega.is_finite() {
                return Err(PtsbError::Parameter {
                    name: "omega_k",
                    reason: "frequencies must be strictly positive",
                    value: mode.omega,
                });
            }
            if mode.g < 0.0 || !mode.g.is_finite() {
                return Err(PtsbError::Domain(format!(
                    "coupling g_{k} must be finite and non-negative, got {}",
                    mode.g
                )));
            }
        }
        let mut sorted: Vec<f64> = modes.iter().map(|m| m.omega).collect();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        if sorted.windows(2).any(|w| w[0] >= w[1]) {
            return Err(PtsbError::Domain(
                "bath frequencies must be pairwise distinct".into(),
            ));
        }
        Ok(Self {
            modes,
            scheme,
            cutoff,
        })
    }

    pub fn modes(&self) -> &[BathMode] {
        &self.modes
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn scheme(&self) -> &BathScheme {
        &self.scheme
    }

    pub fn cutoff(&self) -> Cutoff {
        self.cutoff
    }

    pub fn omegas(&self) -> impl Iterator<Item = f64> + '_ {
        self.modes.iter().map(|m| m.omega)
    }

    pub fn couplings(&self) -> impl Iterator<Item = f64> + '_ {
        self.modes.iter().map(|m| m.g)
    }

    /// Σ_k g_k², the discretized spectral weight.
    pub fn sum_g_sq(&self) -> f64 {
        self.modes.iter().map(|m| m.g * m.g).sum()
    }

    /// Poincaré recurrence time 2π/dω of a uniform grid; `None` for the
    /// other schemes, which have no single level spacing.
    pub fn recurrence_time(&self) -> Option<f64> {
        match self.scheme {
            BathScheme::Uniform { m, omega_max } => {
                Some(2.0 * std::f64::consts::PI * m as f64 / omega_max)
            }
            _ => None,
        }
    }
}

/// Logarithmic discretization with parameter Λ > 1 and M modes, n = 1..M:
///
/// ```text
/// g_n² = (λ ω_c²/2) (1 - Λ^{-(s+1)})/(s+1) Λ^{-n(s+1)},
/// ω_n  = (s+1)/(s+2) (1 - Λ^{-(s+2)})/(1 - Λ^{-(s+1)}) ω_c Λ^{-n}.
/// ```
///
/// Couplings integrate the hard-cutoff J(ω) over each interval exactly, so
/// Σ g_n² equals the closed-form partial geometric sum
/// `λω_c²/(2(s+1)) · (q - q^{M+1})` with `q = Λ^{-(s+1)}`.
pub fn discretize_wilson(p: &ModelParams, lambda_disc: f64, m: usize) -> Result<DiscreteBath> {
    if !(lambda_disc > 1.0) {
        return Err(PtsbError::Parameter {
            name: "Lambda",
            reason: "must be > 1",
            value: lambda_disc,
        });
    }
    if m == 0 {
        return Err(PtsbError::Parameter {
            name: "M",
            reason: "must be >= 1",
            value: 0.0,
        });
    }
    let s = p.s;
    let q1 = lambda_disc.powf(-(s + 1.0));
    let q2 = lambda_disc.powf(-(s + 2.0));
    let g_pref = 0.5 * p.lambda * p.omega_c * p.omega_c * (1.0 - q1) / (s + 1.0);
    let w_pref = (s + 1.0) / (s + 2.0) * (1.0 - q2) / (1.0 - q1) * p.omega_c;
    let modes = (1..=m)
        .map(|n| {
            let scale = lambda_disc.powi(-(n as i32));
            BathMode {
                omega: w_pref * scale,
                g: (g_pref * scale.powf(s + 1.0)).sqrt(),
            }
        })
        .collect();
    DiscreteBath::new(
        modes,
        BathScheme::Wilson { lambda_disc, m },
        Cutoff::Hard,
    )
}

/// Homogeneous discretization: ω_k = k·dω for k = 1..M with dω = ω_max/M and
/// g_k² = J(ω_k)·dω drawn from the exponential-cutoff spectral density.
pub fn discretize_uniform(p: &ModelParams, m: usize, omega_max: f64) -> Result<DiscreteBath> {
    if m == 0 {
        return Err(PtsbError::Parameter {
            name: "M",
            reason: "must be >= 1",
            value: 0.0,
        });
    }
    if !(omega_max > 0.0) {
        return Err(PtsbError::Parameter {
            name: "omega_max",
            reason: "must be > 0",
            value: omega_max,
        });
    }
    let d_omega = omega_max / m as f64;
    let modes = (1..=m)
        .map(|k| {
            let omega = k as f64 * d_omega;
            let j = spectral_density(omega, p, Cutoff::Exponential)?;
            Ok(BathMode {
                omega,
                g: (j * d_omega).sqrt(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    DiscreteBath::new(modes, BathScheme::Uniform { m, omega_max }, Cutoff::Exponential)
}

/// M > 1 equally spaced modes ω_n = ω_1 + (n-1)δ, δ = (ω_M-ω_1)/(M-1), with
/// couplings g_n = √(λ ω_n/(M-1)).
///
/// For a single mode use [`single_mode`], which takes (ω_0, g) explicitly.
pub fn discretize_linear_finite(
    p: &ModelParams,
    m: usize,
    omega_1: f64,
    omega_m: f64,
) -> Result<DiscreteBath> {
    if m < 2 {
        return Err(PtsbError::Parameter {
            name: "M",
            reason: "must be > 1; use single_mode for M = 1",
            value: m as f64,
        });
    }
    if !(omega_1 > 0.0) || !(omega_m > omega_1) {
        return Err(PtsbError::Parameter {
            name: "omega_1",
            reason: "need omega_M > omega_1 > 0",
            value: omega_1,
        });
    }
    let delta = (omega_m - omega_1) / (m - 1) as f64;
    let modes = (1..=m)
        .map(|n| {
            let omega = omega_1 + (n - 1) as f64 * delta;
            BathMode {
                omega,
                g: (p.lambda * omega / (m - 1) as f64).sqrt(),
            }
        })
        .collect();
    DiscreteBath::new(
        modes,
        BathScheme::LinearFinite {
            m,
            omega_1,
            omega_m,
        },
        Cutoff::Hard,
    )
}

/// Single bosonic mode at frequency ω_0 with coupling g, the quantum Rabi
/// bath. In the Rabi Hamiltonian the coupling is λ itself.
pub fn single_mode(omega_0: f64, g: f64) -> Result<DiscreteBath> {
    DiscreteBath::new(
        vec![BathMode { omega: omega_0, g }],
        BathScheme::SingleMode { omega_0 },
        Cutoff::Hard,
    )
}

/// Closed-form Σ g_n² of the logarithmic scheme: λω_c²/(2(s+1))·(q - q^{M+1})
/// with q = Λ^{-(s+1)}.
pub fn wilson_sum_g_sq_closed_form(p: &ModelParams, lambda_disc: f64, m: usize) -> f64 {
    let q = lambda_disc.powf(-(p.s + 1.0));
    0.5 * p.lambda * p.omega_c * p.omega_c / (p.s + 1.0) * (q - q.powi(m as i32 + 1))
}
