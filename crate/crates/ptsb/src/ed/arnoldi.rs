//! Arnoldi iteration for the leftmost (smallest real part) eigenvalues of a
//! large sparse complex matrix.
//!
//! The spin-boson spectra targeted here have the two tracked eigenvalues at
//! the left edge of the spectrum, separated from the oscillator tower by
//! roughly the lowest mode frequency, so a plain Krylov subspace with full
//! reorthogonalization converges quickly; restarts collapse the basis onto
//! the current best Ritz vectors when the subspace cap is reached.

use faer::Mat;
use num_complex::Complex64;

use crate::error::{PtsbError, Result};

use super::sparse::CsrMatrix;

#[derive(Debug, Clone, Copy)]
pub struct ArnoldiOptions {
    /// Krylov basis cap per restart cycle.
    pub max_subspace: usize,
    pub max_restarts: usize,
    /// Residual threshold relative to ‖H‖_∞.
    pub tol: f64,
    /// Ritz extraction cadence (in Arnoldi steps).
    pub check_every: usize,
}

impl Default for ArnoldiOptions {
    fn default() -> Self {
        Self {
            max_subspace: 160,
            max_restarts: 10,
            tol: 1e-10,
            check_every: 10,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RitzPair {
    pub value: Complex64,
    pub vector: Vec<Complex64>,
    /// True relative residual ‖Hx - θx‖ / ‖H‖_∞ with ‖x‖ = 1.
    pub residual: f64,
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E3779B97F4A7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

fn deterministic_start(dim: usize, salt: u64) -> Vec<Complex64> {
    let mut state = 0x5DEECE66D_u64 ^ salt;
    let mut v: Vec<Complex64> = (0..dim)
        .map(|_| {
            let re = (splitmix64(&mut state) >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
            let im = (splitmix64(&mut state) >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
            Complex64::new(re, im)
        })
        .collect();
    normalize(&mut v);
    v
}

fn normalize(v: &mut [Complex64]) -> f64 {
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm > 0.0 {
        for z in v.iter_mut() {
            *z /= norm;
        }
    }
    norm
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Order eigenvalues by (Re, Im) ascending.
pub fn spectral_order(a: &Complex64, b: &Complex64) -> std::cmp::Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

struct RitzCandidate {
    value: Complex64,
    /// Coefficients in the Krylov basis.
    coeffs: Vec<Complex64>,
    /// Residual estimate h_{m+1,m}·|last coefficient|.
    estimate: f64,
}

/// Ritz pairs of the current Hessenberg block, ordered by (Re, Im).
fn ritz_candidates(hess: &[Vec<Complex64>], steps: usize, h_last: f64) -> Vec<RitzCandidate> {
    let mut hm = Mat::<Complex64>::zeros(steps, steps);
    for (j, col) in hess.iter().take(steps).enumerate() {
        for (i, &v) in col.iter().take(steps).enumerate() {
            hm[(i, j)] = v;
        }
    }
    let Ok(evd) = hm.eigen() else {
        return Vec::new();
    };
    let s = evd.S();
    let u = evd.U();
    let mut out: Vec<RitzCandidate> = (0..steps)
        .map(|j| {
            let mut coeffs: Vec<Complex64> = (0..steps).map(|i| u[(i, j)]).collect();
            let norm = coeffs.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            for z in coeffs.iter_mut() {
                *z /= norm;
            }
            let estimate = h_last * coeffs[steps - 1].norm();
            RitzCandidate {
                value: s[j],
                coeffs,
                estimate,
            }
        })
        .collect();
    out.sort_by(|a, b| spectral_order(&a.value, &b.value));
    out
}

/// Compute the `k` eigenpairs of smallest real part.
pub fn leftmost_eigenpairs(
    matrix: &CsrMatrix,
    k: usize,
    seed: Option<&[Complex64]>,
    opts: &ArnoldiOptions,
) -> Result<Vec<RitzPair>> {
    let dim = matrix.dim();
    if k == 0 || k > dim {
        return Err(PtsbError::Domain(format!(
            "requested {k} eigenpairs of a dimension-{dim} matrix"
        )));
    }
    let scale = matrix.norm_inf().max(f64::MIN_POSITIVE);
    let m_cap = opts.max_subspace.min(dim);

    let mut start: Vec<Complex64> = match seed {
        Some(s) if s.len() == dim => {
            let mut v = s.to_vec();
            let norm = normalize(&mut v);
            if norm > 0.0 && norm.is_finite() {
                v
            } else {
                deterministic_start(dim, 1)
            }
        }
        _ => deterministic_start(dim, 1),
    };

    let mut best_residual = f64::INFINITY;
    let mut total_steps = 0usize;

    for restart in 0..=opts.max_restarts {
        let mut basis: Vec<Vec<Complex64>> = vec![start.clone()];
        // Column j holds H[0..=j+1, j].
        let mut hess: Vec<Vec<Complex64>> = Vec::new();
        let mut w = vec![Complex64::default(); dim];
        let mut invariant = false;

        let mut steps = 0usize;
        while steps < m_cap {
            let j = steps;
            matrix.matvec(&basis[j], &mut w);
            total_steps += 1;
            let mut col = vec![Complex64::default(); j + 2];
            // Two-pass classical Gram-Schmidt.
            for _ in 0..2 {
                for (i, v) in basis.iter().enumerate() {
                    let c = dot(v, &w);
                    col[i] += c;
                    for (wi, vi) in w.iter_mut().zip(v) {
                        *wi -= c * vi;
                    }
                }
            }
            let h_next = normalize(&mut w);
            col[j + 1] = Complex64::new(h_next, 0.0);
            hess.push(col);
            steps += 1;

            if h_next <= 1e-14 * scale {
                invariant = true;
                break;
            }
            basis.push(w.clone());

            let due = steps >= (k + 2).max(4)
                && (steps.is_multiple_of(opts.check_every) || steps == m_cap);
            if !due {
                continue;
            }
            let h_last = hess[steps - 1][steps].norm();
            let candidates = ritz_candidates(&hess, steps, h_last);
            if candidates.len() < k {
                continue;
            }
            let target_ok = candidates[..k].iter().all(|c| c.estimate <= opts.tol * scale);
            if target_ok {
                let pairs = assemble(matrix, &basis, &candidates[..k], scale);
                best_residual = pairs
                    .iter()
                    .map(|p| p.residual)
                    .fold(f64::NEG_INFINITY, f64::max);
                if best_residual <= opts.tol {
                    return Ok(pairs);
                }
            }
        }

        // Invariant subspace or subspace cap: harvest what is there.
        let h_last = hess
            .last()
            .map(|col| col.last().unwrap().norm())
            .unwrap_or(0.0);
        let candidates = ritz_candidates(&hess, hess.len(), h_last);
        if candidates.len() >= k {
            let pairs = assemble(matrix, &basis, &candidates[..k], scale);
            let worst = pairs
                .iter()
                .map(|p| p.residual)
                .fold(f64::NEG_INFINITY, f64::max);
            best_residual = best_residual.min(worst);
            if worst <= opts.tol || invariant {
                return Ok(pairs);
            }
            if restart < opts.max_restarts {
                // Restart from the span of the target Ritz vectors.
                let mut next = vec![Complex64::default(); dim];
                for pair in &pairs {
                    for (n, v) in next.iter_mut().zip(&pair.vector) {
                        *n += v;
                    }
                }
                if normalize(&mut next) <= 0.0 {
                    next = deterministic_start(dim, restart as u64 + 2);
                }
                start = next;
            }
        } else {
            start = deterministic_start(dim, restart as u64 + 2);
        }
    }

    Err(PtsbError::NoConvergence {
        iterations: total_steps,
        residual: best_residual,
    })
}

fn assemble(
    matrix: &CsrMatrix,
    basis: &[Vec<Complex64>],
    candidates: &[RitzCandidate],
    scale: f64,
) -> Vec<RitzPair> {
    let dim = matrix.dim();
    candidates
        .iter()
        .map(|cand| {
            let mut x = vec![Complex64::default(); dim];
            for (c, v) in cand.coeffs.iter().zip(basis) {
                if c.norm_sqr() == 0.0 {
                    continue;
                }
                for (xi, vi) in x.iter_mut().zip(v) {
                    *xi += c * vi;
                }
            }
            normalize(&mut x);
            let mut hx = vec![Complex64::default(); dim];
            matrix.matvec(&x, &mut hx);
            let residual = hx
                .iter()
                .zip(&x)
                .map(|(h, v)| (h - cand.value * v).norm_sqr())
                .sum::<f64>()
                .sqrt()
                / scale;
            RitzPair {
                value: cand.value,
                vector: x,
                residual,
            }
        })
        .collect()
}
