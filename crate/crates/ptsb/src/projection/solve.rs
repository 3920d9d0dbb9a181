//! Self-consistent solution of the four projected equations.
//!
//! Outer loop: damped fixed point on the overlap η (adaptive halving when
//! the residual grows). Inner loop: Newton iteration on the complex spin
//! ratio r, treated as two real parameters with a finite-difference
//! Jacobian, zeroing the consistency function f(r) = E_(a) - E_(c) at fixed
//! η. The per-mode displacements are re-solved exactly at every trial
//! point, so the only residual left at a fixed point is the staleness of η
//! itself.
//!
//! Close to an exceptional point the composite fixed-point map slows down
//! critically and can settle on a spurious attractor with a finite
//! residual even though the complex solution pair exists; a stall
//! therefore escalates to a full Newton iteration on (η, r) jointly, after
//! which the fixed point resumes if the residual is still above tolerance.

use num_complex::Complex64;

use crate::bath::DiscreteBath;
use crate::error::{PtsbError, Result};
use crate::model::ModelParams;

use super::{bias_term, mode_displacements, ProjectionState};

#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    /// Convergence threshold on the max-norm of the four residuals.
    pub tol: f64,
    /// Outer iteration budget.
    pub max_iter: usize,
    /// Initial damping of the η update.
    pub damping: f64,
    /// Newton iteration budget per outer step.
    pub newton_max: usize,
    /// Finite-difference step for the Newton Jacobian.
    pub fd_step: f64,
    /// Optional multiplicative (1 + i·nudge) kick on the seed's r, used by
    /// continuation sweeps to let the iteration leave the PT-symmetric
    /// manifold in the broken phase.
    pub r_nudge: Option<f64>,
    /// Escalate to the joint (η, r) Newton when the fixed point stalls.
    pub joint_newton: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 2000,
            damping: 0.5,
            newton_max: 50,
            fd_step: 1e-7,
            r_nudge: None,
            joint_newton: true,
        }
    }
}

/// A converged eigensolution: eigenvalue, variational state, residual norms.
#[derive(Debug, Clone)]
pub struct EigenSolution {
    pub state: ProjectionState,
    /// Max-norm of the four equation residuals at the solution.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Consistency mismatch f(r) = E_(a) - E_(c) at fixed η, with the per-mode
/// displacements re-solved for this trial r.
fn consistency_gap(
    p: &ModelParams,
    bath: &DiscreteBath,
    eta: Complex64,
    r: Complex64,
) -> Result<Complex64> {
    if r == Complex64::default() {
        return Err(PtsbError::Domain("trial r collapsed to zero".into()));
    }
    let a = 0.5 * p.delta * eta * r;
    let b = 0.5 * p.delta * eta.conj() / r;
    let (alpha, beta) = mode_displacements(a, b, bath)?;
    let bias = bias_term(p);
    let mut sum_a = Complex64::default();
    let mut sum_c = Complex64::default();
    for (mode, (al, be)) in bath.modes().iter().zip(alpha.iter().zip(&beta)) {
        sum_a += mode.omega * al.norm_sqr() + 2.0 * mode.g * al.re;
        sum_c += mode.omega * be.norm_sqr() - 2.0 * mode.g * be.re;
    }
    let e_a = -a + bias + sum_a;
    let e_c = -b - bias + sum_c;
    Ok(e_a - e_c)
}

/// Newton on r as two real parameters; returns the best r found together
/// with |f(r)| there. Trial points that hit a singular mode are treated as
/// rejected line-search candidates rather than hard errors.
fn newton_r(
    p: &ModelParams,
    bath: &DiscreteBath,
    eta: Complex64,
    r0: Complex64,
    opts: &SolveOptions,
) -> Result<(Complex64, f64)> {
    let mut r = r0;
    let mut f = consistency_gap(p, bath, eta, r)?;
    let newton_tol = (opts.tol * 1e-2).max(1e-14);
    for _ in 0..opts.newton_max {
        if f.norm() <= newton_tol {
            break;
        }
        let h = opts.fd_step * r.norm().max(1.0);
        let f_re = match consistency_gap(p, bath, eta, r + h) {
            Ok(v) => v,
            Err(_) => break,
        };
        let f_im = match consistency_gap(p, bath, eta, r + Complex64::new(0.0, h)) {
            Ok(v) => v,
            Err(_) => break,
        };
        // Columns of the real 2×2 Jacobian.
        let c1 = (f_re - f) / h;
        let c2 = (f_im - f) / h;
        let det = c1.re * c2.im - c2.re * c1.im;
        if det.abs() < 1e-300 || !det.is_finite() {
            break;
        }
        let dx = (-f.re * c2.im + f.im * c2.re) / det;
        let dy = (-c1.re * f.im + c1.im * f.re) / det;
        let full = Complex64::new(dx, dy);

        // Backtracking line search on |f|.
        let mut scale = 1.0;
        let mut advanced = false;
        for _ in 0..12 {
            let trial = r + scale * full;
            match consistency_gap(p, bath, eta, trial) {
                Ok(ft) if ft.norm() < f.norm() => {
                    r = trial;
                    f = ft;
                    advanced = true;
                    break;
                }
                _ => scale *= 0.5,
            }
        }
        if !advanced {
            break;
        }
    }
    Ok((r, f.norm()))
}

/// Residual measure used to steer the outer iteration: the equation-(c)
/// mismatch plus the η staleness folded through equations (b) and (d). At a
/// fixed point all pieces vanish. Kept separate from
/// [`super::evaluate_residuals`], which verifies final states independently.
fn internal_residual(
    p: &ModelParams,
    bath: &DiscreteBath,
    eta_param: Complex64,
    st: &ProjectionState,
) -> f64 {
    let a_used = 0.5 * p.delta * eta_param * st.r;
    let b_used = 0.5 * p.delta * eta_param.conj() / st.r;
    let a_true = 0.5 * p.delta * st.eta * st.r;
    let b_true = 0.5 * p.delta * st.eta.conj() / st.r;

    let bias = bias_term(p);
    let mut sum_c = Complex64::default();
    let mut stale = 0.0f64;
    for (mode, (al, be)) in bath.modes().iter().zip(st.alpha.iter().zip(&st.beta)) {
        sum_c += mode.omega * be.norm_sqr() - 2.0 * mode.g * be.re;
        let gap = (al - be).norm();
        stale = stale
            .max((a_true - a_used).norm() * gap)
            .max((b_true - b_used).norm() * gap);
    }
    let e_c = -b_true - bias + sum_c;
    (st.energy - e_c).norm().max(stale)
}

/// Solve the four projected equations self-consistently from a guess.
///
/// The damped fixed point on η with Newton on r handles the bulk of
/// parameter space; close to an exceptional point that composite map can
/// stall on a spurious attractor while the complex solution pair exists,
/// so a stall escalates to a full Newton iteration on (η, r) jointly.
///
/// Returns the converged eigensolution (E from equation (a) at the fixed
/// point, residual max-norm ≤ `opts.tol`) or a non-convergence error
/// carrying the last residual.
pub fn solve_selfconsistent(
    p: &ModelParams,
    bath: &DiscreteBath,
    guess: &ProjectionState,
    opts: &SolveOptions,
) -> Result<EigenSolution> {
    if guess.r == Complex64::default() {
        return Err(PtsbError::Domain(
            "seed must have r != 0; the decoupled branches are not solver territory".into(),
        ));
    }
    let mut eta = guess.eta;
    let mut r = guess.r;
    if let Some(nudge) = opts.r_nudge {
        r *= Complex64::new(1.0, nudge);
    }

    let mut damping = opts.damping;
    let mut prev_residual = f64::INFINITY;
    let mut best_residual = f64::INFINITY;
    let mut best_point = (eta, r);
    let mut stall = 0usize;

    let mut iterations = 0usize;
    while iterations < opts.max_iter {
        iterations += 1;
        let (r_new, _gap) = newton_r(p, bath, eta, r, opts)?;
        r = r_new;
        let state = ProjectionState::from_outer(p, bath, eta, r)?;
        let residual = internal_residual(p, bath, eta, &state);

        if residual < best_residual {
            if residual > 0.999 * best_residual {
                stall += 1;
            } else {
                stall = 0;
            }
            best_residual = residual;
            best_point = (eta, r);
        } else {
            stall += 1;
        }
        if residual <= opts.tol {
            return Ok(EigenSolution {
                state,
                residual,
                iterations,
                converged: true,
            });
        }

        // The fixed point stalls close to exceptional points; try the
        // joint Newton from the best iterate, adopt any improvement, and
        // keep the fixed point running otherwise.
        if stall >= 40 {
            stall = 0;
            if opts.joint_newton {
                if let Some((eta_n, r_n, steps)) =
                    newton_eta_r(p, bath, best_point.0, best_point.1, opts)
                {
                    iterations += steps;
                    let state_n = ProjectionState::from_outer(p, bath, eta_n, r_n)?;
                    let residual_n = internal_residual(p, bath, eta_n, &state_n);
                    if residual_n <= opts.tol {
                        return Ok(EigenSolution {
                            state: state_n,
                            residual: residual_n,
                            iterations,
                            converged: true,
                        });
                    }
                    if residual_n < best_residual {
                        best_residual = residual_n;
                        best_point = (eta_n, r_n);
                        eta = eta_n;
                        r = r_n;
                        continue;
                    }
                }
            } else {
                break;
            }
            // No Newton progress: escape the attractor by re-damping.
            damping = (damping * 0.5).max(1.0 / 64.0);
        }

        if residual > prev_residual {
            damping = (damping * 0.5).max(1.0 / 64.0);
        } else {
            damping = (damping * 1.5).min(opts.damping.max(0.5));
        }
        prev_residual = residual;
        eta += damping * (state.eta - eta);
    }

    Err(PtsbError::NoConvergence {
        iterations,
        residual: best_residual,
    })
}

/// Residual vector for the joint Newton: η staleness and the consistency
/// gap, as four real components.
fn joint_residual(
    p: &ModelParams,
    bath: &DiscreteBath,
    eta: Complex64,
    r: Complex64,
) -> Result<[f64; 4]> {
    let a = 0.5 * p.delta * eta * r;
    let b = 0.5 * p.delta * eta.conj() / r;
    let (alpha, beta) = mode_displacements(a, b, bath)?;
    let eta_target = super::overlap_eta(&alpha, &beta);
    let gap = consistency_gap(p, bath, eta, r)?;
    let d_eta = eta_target - eta;
    Ok([d_eta.re, d_eta.im, gap.re, gap.im])
}

fn newton_eta_r(
    p: &ModelParams,
    bath: &DiscreteBath,
    eta0: Complex64,
    r0: Complex64,
    opts: &SolveOptions,
) -> Option<(Complex64, Complex64, usize)> {
    let mut u = [eta0.re, eta0.im, r0.re, r0.im];
    let eval = |u: &[f64; 4]| -> Option<[f64; 4]> {
        if u[2].abs() + u[3].abs() < 1e-12 {
            return None;
        }
        joint_residual(
            p,
            bath,
            Complex64::new(u[0], u[1]),
            Complex64::new(u[2], u[3]),
        )
        .ok()
    };
    let norm = |f: &[f64; 4]| f.iter().map(|x| x * x).sum::<f64>().sqrt();

    let mut f = eval(&u)?;
    for step_count in 0..200 {
        let fnorm = norm(&f);
        if fnorm <= opts.tol * 1e-2 {
            return Some((
                Complex64::new(u[0], u[1]),
                Complex64::new(u[2], u[3]),
                step_count,
            ));
        }
        let mut jac = [[0.0f64; 4]; 4];
        for j in 0..4 {
            let h = opts.fd_step * (1.0 + u[j].abs());
            let mut up = u;
            up[j] += h;
            let fp = eval(&up)?;
            for i in 0..4 {
                jac[i][j] = (fp[i] - f[i]) / h;
            }
        }
        // Gaussian elimination with partial pivoting.
        let mut aug = [[0.0f64; 5]; 4];
        for i in 0..4 {
            aug[i][..4].copy_from_slice(&jac[i]);
            aug[i][4] = -f[i];
        }
        for col in 0..4 {
            let piv = (col..4).max_by(|&a, &b| aug[a][col].abs().total_cmp(&aug[b][col].abs()))?;
            if aug[piv][col].abs() < 1e-300 {
                return None;
            }
            aug.swap(col, piv);
            for row in 0..4 {
                if row != col {
                    let fac = aug[row][col] / aug[col][col];
                    for c in col..5 {
                        aug[row][c] -= fac * aug[col][c];
                    }
                }
            }
        }
        let mut delta = [0.0f64; 4];
        for i in 0..4 {
            delta[i] = aug[i][4] / aug[i][i];
        }
        let mut scale = 1.0;
        let mut advanced = false;
        for _ in 0..25 {
            let trial = [
                u[0] + scale * delta[0],
                u[1] + scale * delta[1],
                u[2] + scale * delta[2],
                u[3] + scale * delta[3],
            ];
            if let Some(ft) = eval(&trial) {
                if norm(&ft) < fnorm {
                    u = trial;
                    f = ft;
                    advanced = true;
                    break;
                }
            }
            scale *= 0.5;
        }
        if !advanced {
            return None;
        }
    }
    None
}
