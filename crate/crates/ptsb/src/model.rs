//! Model parameters and the Ohmic spectral density.

use crate::error::{PtsbError, Result};

/// Sign structure of the σ_z bias term.
///
/// `Imaginary` selects the PT-symmetric Hamiltonian with bias `iε/2 σ_z`
/// (balanced gain and loss); `Real` selects the Hermitian counterpart with
/// bias `ε/2 σ_z`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BiasKind {
    Imaginary,
    Real,
}

impl BiasKind {
    pub fn is_hermitian(self) -> bool {
        matches!(self, BiasKind::Real)
    }

    pub fn label(self) -> &'static str {
        match self {
            BiasKind::Imaginary => "imaginary",
            BiasKind::Real => "real",
        }
    }
}

/// Cutoff convention for the spectral density.
///
/// `Hard` truncates J(ω) at ω_c and keeps the closed-form logarithmic
/// discretization exact; `Exponential` multiplies by exp(-ω/ω_c) and is the
/// convention used for real-time dynamics, where a smooth cutoff keeps the
/// bath correlations well behaved.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cutoff {
    Hard,
    Exponential,
}

impl Cutoff {
    pub fn label(self) -> &'static str {
        match self {
            Cutoff::Hard => "hard",
            Cutoff::Exponential => "exponential",
        }
    }
}

/// Parameters of the (non-)Hermitian spin-boson model.
///
/// Energies are measured in units of the cutoff frequency ω_c unless a
/// different `omega_c` is set explicitly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Tunneling amplitude Δ (> 0).
    pub delta: f64,
    /// Bias magnitude ε (≥ 0).
    pub eps: f64,
    /// Imaginary (PT-symmetric) or real (Hermitian) bias.
    pub bias: BiasKind,
    /// Bath exponent s (> 0); s = 1 is Ohmic.
    pub s: f64,
    /// Cutoff frequency ω_c (> 0).
    pub omega_c: f64,
    /// Dimensionless qubit-bath coupling λ (≥ 0).
    pub lambda: f64,
}

impl ModelParams {
    /// Ohmic parameters (s = 1, ω_c = 1) with the given tunneling, bias and
    /// coupling.
    pub fn new(delta: f64, eps: f64, bias: BiasKind, lambda: f64) -> Result<Self> {
        Self {
            delta,
            eps,
            bias,
            s: 1.0,
            omega_c: 1.0,
            lambda,
        }
        .validated()
    }

    pub fn with_s(mut self, s: f64) -> Result<Self> {
        self.s = s;
        self.validated()
    }

    pub fn with_omega_c(mut self, omega_c: f64) -> Result<Self> {
        self.omega_c = omega_c;
        self.validated()
    }

    pub fn with_lambda(mut self, lambda: f64) -> Result<Self> {
        self.lambda = lambda;
        self.validated()
    }

    pub fn with_eps(mut self, eps: f64) -> Result<Self> {
        self.eps = eps;
        self.validated()
    }

    pub fn validated(self) -> Result<Self> {
        fn check(name: &'static str, value: f64, ok: bool, reason: &'static str) -> Result<()> {
            if ok && value.is_finite() {
                Ok(())
            } else {
                Err(PtsbError::Parameter {
                    name,
                    reason,
                    value,
                })
            }
        }
        check("delta", self.delta, self.delta > 0.0, "must be > 0")?;
        check("eps", self.eps, self.eps >= 0.0, "must be >= 0")?;
        check("s", self.s, self.s > 0.0, "must be > 0")?;
        check("omega_c", self.omega_c, self.omega_c > 0.0, "must be > 0")?;
        check("lambda", self.lambda, self.lambda >= 0.0, "must be >= 0")?;
        Ok(self)
    }
}

/// Spectral density J(ω) = (λ/2) ω_c^{1-s} ω^s, restricted to ω < ω_c for
/// the hard cutoff or damped by exp(-ω/ω_c) for the exponential cutoff.
///
/// Errors on ω ≤ 0; ω must lie strictly inside the bath's support.
pub fn spectral_density(omega: f64, p: &ModelParams, cutoff: Cutoff) -> Result<f64> {
    if !(omega > 0.0) {
        return Err(PtsbError::Domain(format!(
            "spectral density needs omega > 0, got {omega}"
        )));
    }
    let prefactor = 0.5 * p.lambda * p.omega_c.powf(1.0 - p.s) * omega.powf(p.s);
    Ok(match cutoff {
        Cutoff::Hard => {
            if omega < p.omega_c {
                prefactor
            } else {
                0.0
            }
        }
        Cutoff::Exponential => prefactor * (-omega / p.omega_c).exp(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ohmic(lambda: f64) -> ModelParams {
        ModelParams::new(0.3, 0.1, BiasKind::Imaginary, lambda).unwrap()
    }

    #[test]
    fn hard_cutoff_values() {
        let p = ohmic(0.1);
        // (1/2)(0.1)(0.5)
        assert_eq!(spectral_density(0.5, &p, Cutoff::Hard).unwrap(), 0.025);
        // above the cutoff
        assert_eq!(spectral_density(1.5, &p, Cutoff::Hard).unwrap(), 0.0);
    }

    #[test]
    fn exponential_cutoff_value() {
        let p = ohmic(0.1);
        let j = spectral_density(1.0, &p, Cutoff::Exponential).unwrap();
        assert!((j - 0.05 * (-1.0f64).exp()).abs() < 1e-15);
        assert!((j - 0.0183940).abs() < 1e-7);
    }

    #[test]
    fn non_positive_omega_is_domain_error() {
        let p = ohmic(0.1);
        assert!(spectral_density(0.0, &p, Cutoff::Hard).is_err());
        assert!(spectral_density(-1.0, &p, Cutoff::Exponential).is_err());
    }

    #[test]
    fn parameter_validation() {
        assert!(ModelParams::new(0.0, 0.1, BiasKind::Imaginary, 0.1).is_err());
        assert!(ModelParams::new(0.3, -0.1, BiasKind::Imaginary, 0.1).is_err());
        assert!(ModelParams::new(0.3, 0.1, BiasKind::Imaginary, -0.1).is_err());
        assert!(ohmic(0.1).with_s(0.0).is_err());
        assert!(ohmic(0.1).with_omega_c(-2.0).is_err());
    }

    #[test]
    fn general_s_scaling() {
        // sub-Ohmic s = 1/2 at omega = ω_c/4: (λ/2) ω_c^{1/2} ω^{1/2}
        let p = ohmic(0.2).with_s(0.5).unwrap();
        let j = spectral_density(0.25, &p, Cutoff::Hard).unwrap();
        assert!((j - 0.1 * 0.25f64.sqrt()).abs() < 1e-15);
    }
}
