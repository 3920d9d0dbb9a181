//! Displacement-operator projection method for eigenstates.
//!
//! The trial state attaches independent coherent displacements to the two
//! spin branches,
//!
//! ```text
//! |Ψ⟩ = ( D(α)|0⟩ , r·D(β)|0⟩ )ᵀ,   D(α) = exp Σ_k (α_k a†_k - α*_k a_k),
//! ```
//!
//! and projecting H|Ψ⟩ = E|Ψ⟩ onto the displaced vacua and their
//! single-excitation companions yields four coupled equations (`b` is the
//! bias term, iε/2 or ε/2):
//!
//! ```text
//! (a)  E = -Δηr/2 + b + Σ ω_k|α_k|² + Σ g_k(α_k + α*_k)
//! (b)  (Δηr/2)(α_k - β_k) + ω_k α_k + g_k = 0
//! (c)  E = -Δη*/(2r) - b + Σ ω_k|β_k|² - Σ g_k(β_k + β*_k)
//! (d)  (Δη*/(2r))(β_k - α_k) + ω_k β_k - g_k = 0
//! ```
//!
//! with the coherent-state overlap
//! η = exp[-½Σ(|α_k|² + |β_k|²)]·exp[Σ α*_k β_k].
//!
//! Writing A = Δηr/2 and B = Δη*/(2r), equations (b) and (d) are an exact
//! per-mode 2×2 linear solve ([`mode_displacements`]); the remaining
//! self-consistency is closed by a damped fixed point on η with a Newton
//! iteration on r ([`solve_selfconsistent`]).

mod solve;
mod sweep;

pub use solve::{solve_selfconsistent, EigenSolution, SolveOptions};
pub use sweep::{
    linear_grid, BathSpec, BranchPoint, EpEstimate, EpOutcome, SweepAxis, SweepOptions,
    SweepResult, Sweeper,
};

use num_complex::Complex64;

use crate::bath::DiscreteBath;
use crate::error::{PtsbError, Result};
use crate::model::{BiasKind, ModelParams};

/// Bias term b entering equations (a) and (c): iε/2 or ε/2.
pub fn bias_term(p: &ModelParams) -> Complex64 {
    match p.bias {
        BiasKind::Imaginary => Complex64::new(0.0, 0.5 * p.eps),
        BiasKind::Real => Complex64::new(0.5 * p.eps, 0.0),
    }
}

/// Which bare-qubit eigenvalue a seed or branch tracks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// E = -√(b² + Δ²/4): the lowest real part (principal square root).
    Lower,
    /// E = +√(b² + Δ²/4).
    Upper,
}

/// Variational state of the projection method.
///
/// `eta` always equals the overlap recomputed from `alpha`/`beta`; every
/// constructor in this module maintains that, and [`overlap_eta`] rebuilds
/// it from scratch. `r` is never zero — the decoupled Δ → 0 branches, where
/// the spin amplitude ratio degenerates, are covered by
/// [`decoupled_branch`] instead of the solver.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionState {
    pub r: Complex64,
    pub alpha: Vec<Complex64>,
    pub beta: Vec<Complex64>,
    pub eta: Complex64,
    pub energy: Complex64,
}

impl ProjectionState {
    /// Fully determined state at outer-iteration parameters (η, r): the
    /// displacements solve (b)/(d) for A = Δηr/2, B = Δη*/(2r), the stored
    /// overlap is recomputed from them, and the energy is equation (a).
    pub fn from_outer(
        p: &ModelParams,
        bath: &DiscreteBath,
        eta_param: Complex64,
        r: Complex64,
    ) -> Result<Self> {
        if r == Complex64::default() {
            return Err(PtsbError::Domain(
                "spin amplitude ratio r must be nonzero".into(),
            ));
        }
        let a = 0.5 * p.delta * eta_param * r;
        let b = 0.5 * p.delta * eta_param.conj() / r;
        let (alpha, beta) = mode_displacements(a, b, bath)?;
        let eta = overlap_eta(&alpha, &beta);
        let energy = energy_from_a(p, bath, eta, r, &alpha);
        Ok(Self {
            r,
            alpha,
            beta,
            eta,
            energy,
        })
    }

    /// PT image of this state: an eigenstate with the conjugate eigenvalue.
    ///
    /// Applying PT = σ_x ⊗ exp(iπ Σ a†a) ∘ conj and renormalizing the upper
    /// amplitude to one maps (E, r, α, β) ↦ (E*, 1/r*, -β*, -α*); the
    /// overlap η is invariant under the map.
    pub fn pt_partner(&self) -> Self {
        let alpha: Vec<Complex64> = self.beta.iter().map(|z| -z.conj()).collect();
        let beta: Vec<Complex64> = self.alpha.iter().map(|z| -z.conj()).collect();
        let eta = overlap_eta(&alpha, &beta);
        Self {
            r: self.r.conj().inv(),
            alpha,
            beta,
            eta,
            energy: self.energy.conj(),
        }
    }
}

/// Coherent-state overlap η = ⟨0|D†(α)D(β)|0⟩, evaluated in log space.
///
/// The exponent is accumulated first and exponentiated once; below
/// Re ℰ = -700 the overlap is flushed to zero rather than underflowing
/// through subnormals.
pub fn overlap_eta(alpha: &[Complex64], beta: &[Complex64]) -> Complex64 {
    let exponent = overlap_log_eta(alpha, beta);
    if exponent.re < -700.0 {
        Complex64::default()
    } else {
        exponent.exp()
    }
}

/// Log of the overlap: -½Σ(|α_k|² + |β_k|²) + Σ α*_k β_k.
pub fn overlap_log_eta(alpha: &[Complex64], beta: &[Complex64]) -> Complex64 {
    let mut acc = Complex64::default();
    for (a, b) in alpha.iter().zip(beta) {
        acc += a.conj() * b - 0.5 * (a.norm_sqr() + b.norm_sqr());
    }
    acc
}

/// Exact per-mode solve of equations (b) and (d) for given A = Δηr/2 and
/// B = Δη*/(2r):
///
/// ```text
/// α_k = g_k (A - B - ω_k) / (ω_k (A + B + ω_k)),
/// β_k = g_k (A - B + ω_k) / (ω_k (A + B + ω_k)).
/// ```
///
/// Errors when any denominator magnitude drops below 1e-14 (near-resonant
/// mode), naming the offending k.
pub fn mode_displacements(
    a: Complex64,
    b: Complex64,
    bath: &DiscreteBath,
) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    let n = bath.len();
    let mut alpha = Vec::with_capacity(n);
    let mut beta = Vec::with_capacity(n);
    for (k, mode) in bath.modes().iter().enumerate() {
        let denom = mode.omega * (a + b + mode.omega);
        let magnitude = denom.norm();
        if magnitude < 1e-14 {
            return Err(PtsbError::SingularMode { mode: k, magnitude });
        }
        let diff = a - b;
        alpha.push(mode.g * (diff - mode.omega) / denom);
        beta.push(mode.g * (diff + mode.omega) / denom);
    }
    Ok((alpha, beta))
}

fn energy_from_a(
    p: &ModelParams,
    bath: &DiscreteBath,
    eta: Complex64,
    r: Complex64,
    alpha: &[Complex64],
) -> Complex64 {
    let mut bath_part = 0.0;
    for (mode, al) in bath.modes().iter().zip(alpha) {
        bath_part += mode.omega * al.norm_sqr() + 2.0 * mode.g * al.re;
    }
    -0.5 * p.delta * eta * r + bias_term(p) + bath_part
}

/// Residuals of the four projected equations for a given state.
#[derive(Debug, Clone, Copy)]
pub struct Residuals {
    /// E - RHS of equation (a).
    pub r_a: Complex64,
    /// E - RHS of equation (c).
    pub r_c: Complex64,
    /// max_k |(Δηr/2)(α_k - β_k) + ω_k α_k + g_k|.
    pub r_b_max: f64,
    /// max_k |(Δη*/2r)(β_k - α_k) + ω_k β_k - g_k|.
    pub r_d_max: f64,
}

impl Residuals {
    pub fn max_norm(&self) -> f64 {
        self.r_a
            .norm()
            .max(self.r_c.norm())
            .max(self.r_b_max)
            .max(self.r_d_max)
    }
}

/// Evaluate all four equation residuals directly from the state fields.
///
/// The overlap is recomputed from the stored displacements, so this is an
/// independent check of any solver output: all four residuals vanish iff
/// the state is an eigensolution. Errors on r = 0, where equation (c) is
/// undefined.
pub fn evaluate_residuals(
    p: &ModelParams,
    bath: &DiscreteBath,
    st: &ProjectionState,
) -> Result<Residuals> {
    if st.r == Complex64::default() {
        return Err(PtsbError::Domain(
            "equation (c) divides by r; r = 0 is outside the ansatz".into(),
        ));
    }
    let bias = bias_term(p);
    let eta = overlap_eta(&st.alpha, &st.beta);
    let a_coef = 0.5 * p.delta * eta * st.r;
    let c_coef = 0.5 * p.delta * eta.conj() / st.r;

    let mut sum_a = Complex64::default();
    let mut sum_c = Complex64::default();
    let mut r_b_max: f64 = 0.0;
    let mut r_d_max: f64 = 0.0;
    for (k, mode) in bath.modes().iter().enumerate() {
        let al = st.alpha[k];
        let be = st.beta[k];
        sum_a += mode.omega * al.norm_sqr() + mode.g * (al + al.conj());
        sum_c += mode.omega * be.norm_sqr() - mode.g * (be + be.conj());
        let res_b = a_coef * (al - be) + mode.omega * al + mode.g;
        let res_d = c_coef * (be - al) + mode.omega * be - mode.g;
        r_b_max = r_b_max.max(res_b.norm());
        r_d_max = r_d_max.max(res_d.norm());
    }
    let r_a = st.energy + a_coef - bias - sum_a;
    let r_c = st.energy + c_coef + bias - sum_c;
    Ok(Residuals {
        r_a,
        r_c,
        r_b_max,
        r_d_max,
    })
}

/// Analytic eigenstate of the bare two-level system (λ = 0): η = 1,
/// zero displacements, E = ∓√(b² + Δ²/4) and r = 2(b - E)/Δ.
///
/// For the imaginary bias this is E = ∓½√(Δ² - ε²) when ε < Δ and the
/// ∓i-branches of ½√(ε² - Δ²) when ε > Δ (principal square root).
pub fn qubit_seed(p: &ModelParams, bath_size: usize, branch: Branch) -> ProjectionState {
    let b = bias_term(p);
    let root = (b * b + 0.25 * p.delta * p.delta).sqrt();
    let energy = match branch {
        Branch::Lower => -root,
        Branch::Upper => root,
    };
    let r = 2.0 * (b - energy) / p.delta;
    ProjectionState {
        r,
        alpha: vec![Complex64::default(); bath_size],
        beta: vec![Complex64::default(); bath_size],
        eta: Complex64::new(1.0, 0.0),
        energy,
    }
}

/// Exact decoupled eigenbranch in the Δ → 0 limit: the spin projection is
/// conserved, each oscillator is rigidly displaced by ∓g_k/ω_k, and
/// E = ±b - Σ g_k²/ω_k for the up/down branch.
#[derive(Debug, Clone)]
pub struct DecoupledBranch {
    pub energy: Complex64,
    /// Displacement of every mode (α for the up branch, β for the down).
    pub displacement: Vec<Complex64>,
}

pub fn decoupled_branch(p: &ModelParams, bath: &DiscreteBath, up: bool) -> DecoupledBranch {
    let shift: f64 = bath.modes().iter().map(|m| m.g * m.g / m.omega).sum();
    let b = bias_term(p);
    let sign = if up { 1.0 } else { -1.0 };
    let displacement = bath
        .modes()
        .iter()
        .map(|m| Complex64::new(sign * (-m.g / m.omega), 0.0))
        .collect();
    DecoupledBranch {
        energy: sign * b - shift,
        displacement,
    }
}
