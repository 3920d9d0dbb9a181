//! Truncated-Fock matrix representation of the qubit + M-mode Hamiltonian.
//!
//! Basis: {↑, ↓} ⊗ Fock(mode 1) ⊗ … ⊗ Fock(mode M), row-major over the
//! per-mode occupations with the spin as the slowest index. All matrix
//! elements other than the bias are real; the full matrix is complex
//! symmetric for the imaginary bias and real symmetric for the real bias.

use num_complex::Complex64;

use crate::bath::DiscreteBath;
use crate::error::{PtsbError, Result};
use crate::model::{BiasKind, ModelParams};
use crate::projection::bias_term;

use super::sparse::CsrMatrix;

pub const DEFAULT_DIMENSION_CAP: usize = 2_000_000;

/// Per-mode boson number cutoffs; total dimension 2·Π(n_max + 1).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FockTruncation {
    per_mode: Vec<usize>,
    cap: usize,
}

impl FockTruncation {
    pub fn new(per_mode: Vec<usize>) -> Self {
        Self {
            per_mode,
            cap: DEFAULT_DIMENSION_CAP,
        }
    }

    /// The same cutoff for every one of `modes` modes.
    pub fn uniform(n_max: usize, modes: usize) -> Self {
        Self::new(vec![n_max; modes])
    }

    pub fn with_cap(mut self, cap: usize) -> Self {
        self.cap = cap;
        self
    }

    /// Every cutoff raised by `bump` (convergence re-runs).
    pub fn bumped(&self, bump: usize) -> Self {
        Self {
            per_mode: self.per_mode.iter().map(|n| n + bump).collect(),
            cap: self.cap,
        }
    }

    pub fn per_mode(&self) -> &[usize] {
        &self.per_mode
    }

    pub fn mode_count(&self) -> usize {
        self.per_mode.len()
    }

    /// 2·Π(n_max + 1), checked against the cap.
    pub fn dimension(&self) -> Result<usize> {
        let mut dim: usize = 2;
        for &n in &self.per_mode {
            dim = dim
                .checked_mul(n + 1)
                .ok_or(PtsbError::DimensionCap {
                    dim: usize::MAX,
                    cap: self.cap,
                })?;
        }
        if dim > self.cap {
            return Err(PtsbError::DimensionCap { dim, cap: self.cap });
        }
        Ok(dim)
    }
}

/// The assembled matrix together with the tensor structure needed to act
/// with parity-type operators on it.
#[derive(Debug, Clone)]
pub struct FockHamiltonian {
    pub matrix: CsrMatrix,
    pub trunc: FockTruncation,
    pub bias: BiasKind,
    /// Strides of each mode in the Fock part of the index.
    strides: Vec<usize>,
    fock_dim: usize,
}

impl FockHamiltonian {
    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn fock_dim(&self) -> usize {
        self.fock_dim
    }

    /// Occupation digits of a Fock index.
    pub fn occupations(&self, fock_index: usize, out: &mut [usize]) {
        let mut rest = fock_index;
        for (j, &stride) in self.strides.iter().enumerate() {
            out[j] = rest / stride;
            rest %= stride;
        }
    }

    /// Total boson number parity (−1)^{Σ n_j} of a Fock index.
    pub fn number_parity(&self, fock_index: usize) -> f64 {
        let mut rest = fock_index;
        let mut total = 0usize;
        for &stride in &self.strides {
            total += rest / stride;
            rest %= stride;
        }
        if total.is_multiple_of(2) {
            1.0
        } else {
            -1.0
        }
    }
}

/// Build H = -(Δ/2)σ_x + b·σ_z + Σ ω_n a†_n a_n + σ_z Σ g_n (a_n + a†_n)
/// in the truncated tensor basis (b = iε/2 or ε/2 per the bias kind).
pub fn build_hamiltonian(
    p: &ModelParams,
    bath: &DiscreteBath,
    trunc: &FockTruncation,
) -> Result<FockHamiltonian> {
    if bath.len() != trunc.mode_count() {
        return Err(PtsbError::Domain(format!(
            "bath has {} modes but truncation lists {}",
            bath.len(),
            trunc.mode_count()
        )));
    }
    let dim = trunc.dimension()?;
    let fock_dim = dim / 2;
    let m = trunc.mode_count();

    let mut strides = vec![1usize; m];
    for j in (0..m.saturating_sub(1)).rev() {
        strides[j] = strides[j + 1] * (trunc.per_mode()[j + 1] + 1);
    }

    let bias = bias_term(p);
    let half_delta = Complex64::new(-0.5 * p.delta, 0.0);
    let modes = bath.modes();

    let mut rows: Vec<Vec<(u32, Complex64)>> = Vec::with_capacity(dim);
    let mut occ = vec![0usize; m];
    for i in 0..dim {
        let spin_down = i >= fock_dim;
        let sign = if spin_down { -1.0 } else { 1.0 };
        let fock = i % fock_dim;
        {
            let mut rest = fock;
            for (j, &stride) in strides.iter().enumerate() {
                occ[j] = rest / stride;
                rest %= stride;
            }
        }

        let mut row: Vec<(u32, Complex64)> = Vec::with_capacity(2 * m + 2);
        // Diagonal: bias + oscillator energies.
        let osc: f64 = occ
            .iter()
            .zip(modes)
            .map(|(&n, mode)| n as f64 * mode.omega)
            .sum();
        row.push((i as u32, sign * bias + osc));
        // Tunneling flips the spin.
        let flipped = if spin_down { fock } else { fock + fock_dim };
        row.push((flipped as u32, half_delta));
        // σ_z-conditioned displacement couplings.
        for (j, mode) in modes.iter().enumerate() {
            if mode.g == 0.0 {
                continue;
            }
            let n = occ[j];
            if n > 0 {
                let down = i - strides[j];
                row.push((down as u32, Complex64::new(sign * mode.g * (n as f64).sqrt(), 0.0)));
            }
            if n < trunc.per_mode()[j] {
                let up = i + strides[j];
                row.push((
                    up as u32,
                    Complex64::new(sign * mode.g * ((n + 1) as f64).sqrt(), 0.0),
                ));
            }
        }
        rows.push(row);
    }

    Ok(FockHamiltonian {
        matrix: CsrMatrix::from_rows(dim, rows),
        trunc: trunc.clone(),
        bias: p.bias,
        strides,
        fock_dim,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bath::single_mode;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn qubit_block_structure() {
        // One mode, n_max = 0: pure qubit 2×2 in the Fock vacuum.
        let p = ModelParams::new(0.3, 0.1, BiasKind::Imaginary, 0.0).unwrap();
        let bath = single_mode(1.0, 0.0).unwrap();
        let h = build_hamiltonian(&p, &bath, &FockTruncation::uniform(0, 1)).unwrap();
        assert_eq!(h.dim(), 2);
        assert_eq!(h.matrix.get(0, 0), c(0.0, 0.05));
        assert_eq!(h.matrix.get(1, 1), c(0.0, -0.05));
        assert_eq!(h.matrix.get(0, 1), c(-0.15, 0.0));
        assert_eq!(h.matrix.get(1, 0), c(-0.15, 0.0));
    }

    #[test]
    fn stored_matrix_is_complex_symmetric() {
        let p = ModelParams::new(0.5, 0.1, BiasKind::Imaginary, 0.0).unwrap();
        let bath = single_mode(1.0, 0.3).unwrap();
        let h = build_hamiltonian(&p, &bath, &FockTruncation::uniform(4, 1)).unwrap();
        for i in 0..h.dim() {
            for (j, v) in h.matrix.row(i) {
                assert_eq!(h.matrix.get(j, i), v, "asymmetry at ({i},{j})");
            }
        }
    }

    #[test]
    fn coupling_signs_follow_spin() {
        let p = ModelParams::new(0.5, 0.0, BiasKind::Real, 0.0).unwrap();
        let bath = single_mode(1.0, 0.25).unwrap();
        let h = build_hamiltonian(&p, &bath, &FockTruncation::uniform(2, 1)).unwrap();
        // ⟨↑,1|H|↑,0⟩ = +g, ⟨↓,1|H|↓,0⟩ = -g
        assert_eq!(h.matrix.get(1, 0), c(0.25, 0.0));
        assert_eq!(h.matrix.get(4, 3), c(-0.25, 0.0));
        // ⟨↑,2|H|↑,1⟩ = g√2
        assert!((h.matrix.get(2, 1) - c(0.25 * 2.0f64.sqrt(), 0.0)).norm() < 1e-15);
    }

    #[test]
    fn dimension_cap_is_enforced() {
        let p = ModelParams::new(0.3, 0.1, BiasKind::Imaginary, 0.1).unwrap();
        let bath = crate::bath::discretize_linear_finite(&p, 5, 1.0, 1.4).unwrap();
        let trunc = FockTruncation::uniform(40, 5); // 2·41⁵ ≫ cap
        match build_hamiltonian(&p, &bath, &trunc) {
            Err(PtsbError::DimensionCap { dim, cap }) => {
                assert_eq!(dim, 2 * 41usize.pow(5));
                assert_eq!(cap, DEFAULT_DIMENSION_CAP);
            }
            other => panic!("expected cap refusal, got {other:?}"),
        }
    }

    #[test]
    fn number_parity_decoding() {
        let p = ModelParams::new(0.3, 0.1, BiasKind::Imaginary, 0.1).unwrap();
        let bath = crate::bath::discretize_linear_finite(&p, 3, 1.0, 1.4).unwrap();
        let h = build_hamiltonian(&p, &bath, &FockTruncation::uniform(2, 3)).unwrap();
        let mut occ = vec![0usize; 3];
        // index = n1·9 + n2·3 + n3 for per-mode dim 3
        h.occupations(7, &mut occ); // 0,2,1
        assert_eq!(occ, vec![0, 2, 1]);
        assert_eq!(h.number_parity(7), -1.0);
        assert_eq!(h.number_parity(8), 1.0); // 0,2,2
    }
}
