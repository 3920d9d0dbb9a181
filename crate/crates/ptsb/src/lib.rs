//! Spectrum and real-time dynamics of the PT-symmetric non-Hermitian
//! spin-boson model.
//!
//! A two-level system with tunneling `Δ` and a purely imaginary energy bias
//! `iε/2` is coupled to a bath of harmonic oscillators,
//!
//! ```text
//! H = -(Δ/2) σ_x + i(ε/2) σ_z + Σ_k ω_k a†_k a_k + σ_z Σ_k g_k (a_k + a†_k),
//! ```
//!
//! which commutes with the combined parity-time operation
//! `PT = σ_x ⊗ exp(iπ Σ a†a) ∘ K` and therefore admits real eigenvalues in
//! the PT-unbroken phase, complex-conjugate pairs in the broken phase, with
//! an exceptional point in between. The Hermitian variant (real bias
//! `ε/2 σ_z`) is supported throughout as a parameter choice.
//!
//! The crate is organized around four pieces:
//!
//! - [`model`] / [`bath`]: model parameters, the Ohmic spectral density, and
//!   the bath discretizations (logarithmic, uniform, equally spaced finite,
//!   single mode).
//! - [`ed`]: truncated-Fock exact diagonalization, the ground-truth oracle
//!   for finite mode counts, plus the PT-symmetry matrix identity check.
//! - [`projection`]: the displacement-operator projection method — four
//!   coupled self-consistent equations for the eigenvalue and the per-mode
//!   displacements — with continuation sweeps and exceptional-point search.
//! - [`tdvp`]: time evolution of the asymmetric coherent-state trial state
//!   under the Dirac-Frenkel variational equations of motion, with an
//!   adaptive embedded Runge-Kutta integrator in [`ode`].
//!
//! A rendered guide with worked examples lives in the `book/` directory of
//! the repository; its code snippets are compiled as doc-tests.

pub mod bath;
pub mod ed;
pub mod error;
pub mod model;
pub mod ode;
pub mod projection;
pub mod tdvp;

pub use bath::{
    discretize_linear_finite, discretize_uniform, discretize_wilson, single_mode, BathScheme,
    DiscreteBath,
};
pub use error::PtsbError;
pub use model::{spectral_density, BiasKind, Cutoff, ModelParams};
