#![allow(dead_code)]

//! Shared test oracles, independent of the library's solution paths.

use num_complex::Complex64;
use ptsb::BiasKind;

/// Closed-form propagator of the bare two-level system
/// H = [[b, -Δ/2], [-Δ/2, -b]] (b = iε/2 or ε/2): with θ = √(b² + Δ²/4),
///
///   exp(-iHt) = cos(θt)·I - i·t·sinc(θt)·H,
///
/// which is entire in θ² and therefore valid through the exceptional
/// point, where the growth is algebraic.
pub fn qubit_propagator(
    delta: f64,
    eps: f64,
    bias: BiasKind,
    t: f64,
    l0: Complex64,
    r0: Complex64,
) -> (Complex64, Complex64) {
    let b = match bias {
        BiasKind::Imaginary => Complex64::new(0.0, 0.5 * eps),
        BiasKind::Real => Complex64::new(0.5 * eps, 0.0),
    };
    let theta = (b * b + 0.25 * delta * delta).sqrt();
    let z = theta * t;
    let cos = z.cos();
    let sinc = if z.norm() < 1e-6 {
        Complex64::new(1.0, 0.0) - z * z / 6.0
    } else {
        z.sin() / z
    };
    let i = Complex64::new(0.0, 1.0);
    let off = Complex64::new(-0.5 * delta, 0.0);
    let l = (cos - i * t * sinc * b) * l0 - i * t * sinc * off * r0;
    let r = -i * t * sinc * off * l0 + (cos + i * t * sinc * b) * r0;
    (l, r)
}

pub fn qubit_sz(delta: f64, eps: f64, bias: BiasKind, t: f64, floor: f64) -> f64 {
    let (l, r) = qubit_propagator(
        delta,
        eps,
        bias,
        t,
        Complex64::new(1.0, 0.0),
        Complex64::new(floor, 0.0),
    );
    (l.norm_sqr() - r.norm_sqr()) / (l.norm_sqr() + r.norm_sqr())
}

/// Brute-force root finder for the four projected equations of a
/// single-mode bath: full Newton on all eight real unknowns (E, r, α, β)
/// from many pseudo-random seeds, sharing no update logic with the
/// production solver. Returns deduplicated eigenvalues sorted by (Re, Im).
pub fn survey_single_mode_roots(
    delta: f64,
    eps: f64,
    omega: f64,
    g: f64,
    seeds: usize,
) -> Vec<Complex64> {
    let residual = |u: &[f64; 8]| -> [f64; 8] {
        let e = Complex64::new(u[0], u[1]);
        let r = Complex64::new(u[2], u[3]);
        let al = Complex64::new(u[4], u[5]);
        let be = Complex64::new(u[6], u[7]);
        let eta = (-0.5 * (al.norm_sqr() + be.norm_sqr()) + al.conj() * be).exp();
        let bias = Complex64::new(0.0, 0.5 * eps);
        let a = 0.5 * delta * eta * r;
        let bb = 0.5 * delta * eta.conj() / r;
        let ra = e + a - bias - omega * al.norm_sqr() - g * (al + al.conj());
        let rb = a * (al - be) + omega * al + g;
        let rc = e + bb + bias - omega * be.norm_sqr() + g * (be + be.conj());
        let rd = bb * (be - al) + omega * be - g;
        [ra.re, ra.im, rb.re, rb.im, rc.re, rc.im, rd.re, rd.im]
    };
    let norm = |f: &[f64; 8]| f.iter().map(|x| x * x).sum::<f64>().sqrt();

    let newton = |start: [f64; 8]| -> Option<[f64; 8]> {
        let mut u = start;
        for _ in 0..250 {
            let f = residual(&u);
            let fnorm = norm(&f);
            if fnorm < 1e-12 {
                return Some(u);
            }
            let mut jac = [[0.0f64; 8]; 8];
            for j in 0..8 {
                let h = 1e-7 * (1.0 + u[j].abs());
                let mut up = u;
                up[j] += h;
                let fp = residual(&up);
                for i in 0..8 {
                    jac[i][j] = (fp[i] - f[i]) / h;
                }
            }
            let mut aug = [[0.0f64; 9]; 8];
            for i in 0..8 {
                aug[i][..8].copy_from_slice(&jac[i]);
                aug[i][8] = -f[i];
            }
            for col in 0..8 {
                let piv =
                    (col..8).max_by(|&a, &b| aug[a][col].abs().total_cmp(&aug[b][col].abs()))?;
                if aug[piv][col].abs() < 1e-14 {
                    return None;
                }
                aug.swap(col, piv);
                for row in 0..8 {
                    if row != col {
                        let fac = aug[row][col] / aug[col][col];
                        for c in col..9 {
                            aug[row][c] -= fac * aug[col][c];
                        }
                    }
                }
            }
            let mut step = [0.0f64; 8];
            for i in 0..8 {
                step[i] = aug[i][8] / aug[i][i];
            }
            let mut scale = 1.0;
            let mut moved = false;
            for _ in 0..25 {
                let mut trial = u;
                for i in 0..8 {
                    trial[i] += scale * step[i];
                }
                if trial[2].abs() + trial[3].abs() > 1e-8 && norm(&residual(&trial)) < fnorm {
                    u = trial;
                    moved = true;
                    break;
                }
                scale *= 0.5;
            }
            if !moved {
                return None;
            }
        }
        None
    };

    let mut state = 0x2545F4914F6CDD1D_u64;
    let mut rand = move || {
        state = state
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
    };
    let mut roots: Vec<Complex64> = Vec::new();
    for _ in 0..seeds {
        let seed = [
            rand() * 2.0 - 0.5,
            rand() * 0.5,
            rand() * 3.0,
            rand() * 3.0,
            rand() * 1.5,
            rand() * 1.5,
            rand() * 1.5,
            rand() * 1.5,
        ];
        if let Some(u) = newton(seed) {
            let e = Complex64::new(u[0], u[1]);
            if e.re.abs() > 3.0 || e.im.abs() > 2.0 {
                continue;
            }
            if !roots.iter().any(|&r| (r - e).norm() < 1e-6) {
                roots.push(e);
            }
        }
    }
    roots.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    roots
}
