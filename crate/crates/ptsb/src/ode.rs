//! Adaptive embedded Runge-Kutta integration for complex ODE systems.
//!
//! Implements the Dormand-Prince 5(4) pair with the standard fourth-order
//! dense-output interpolant, componentwise mixed absolute/relative error
//! control, and FSAL reuse. State vectors are flat `Complex64` slices; the
//! driver owns the right-hand side as a closure.

use num_complex::Complex64;

use crate::error::{PtsbError, Result};

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];

const A2: [f64; 1] = [0.2];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [
    19372.0 / 6561.0,
    -25360.0 / 2187.0,
    64448.0 / 6561.0,
    -212.0 / 729.0,
];
const A6: [f64; 5] = [
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
];
// Row 7 equals the fifth-order weights (FSAL).
const A7: [f64; 6] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
];

/// Difference between the fifth- and fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Dense-output weights for the fifth stage polynomial.
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

/// Error-control and step-size options.
#[derive(Debug, Clone, Copy)]
pub struct StepControl {
    pub rtol: f64,
    pub atol: f64,
    /// Upper bound on the step size; `None` leaves it unconstrained.
    pub h_max: Option<f64>,
    /// Initial step; `None` selects one automatically.
    pub h_init: Option<f64>,
    /// Abort when the controller drives the step below this.
    pub h_min: f64,
    pub max_steps: usize,
}

impl Default for StepControl {
    fn default() -> Self {
        Self {
            rtol: 1e-8,
            atol: 1e-10,
            h_max: None,
            h_init: None,
            h_min: 1e-12,
            max_steps: 50_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct OdeStats {
    pub steps_accepted: usize,
    pub steps_rejected: usize,
    pub rhs_evaluations: usize,
}

/// One-step Dormand-Prince 5(4) integrator with dense output over the last
/// accepted step.
pub struct Dopri5<F>
where
    F: FnMut(f64, &[Complex64], &mut [Complex64]),
{
    f: F,
    ctrl: StepControl,
    pub stats: OdeStats,
    t: f64,
    y: Vec<Complex64>,
    h: f64,
    /// Stage slopes; k[0] carries the FSAL value for the next step.
    k: [Vec<Complex64>; 7],
    fsal_valid: bool,
    /// Dense-output coefficients for [t_old, t].
    cont: [Vec<Complex64>; 5],
    t_old: f64,
    h_old: f64,
    work: Vec<Complex64>,
}

impl<F> Dopri5<F>
where
    F: FnMut(f64, &[Complex64], &mut [Complex64]),
{
    pub fn new(f: F, t0: f64, y0: Vec<Complex64>, ctrl: StepControl) -> Self {
        let n = y0.len();
        let zeros = vec![Complex64::default(); n];
        Self {
            f,
            ctrl,
            stats: OdeStats::default(),
            t: t0,
            y: y0,
            h: 0.0,
            k: std::array::from_fn(|_| zeros.clone()),
            fsal_valid: false,
            cont: std::array::from_fn(|_| zeros.clone()),
            t_old: t0,
            h_old: 0.0,
            work: zeros,
        }
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn y(&self) -> &[Complex64] {
        &self.y
    }

    /// Start time of the last accepted step.
    pub fn t_old(&self) -> f64 {
        self.t_old
    }

    /// Mutate the state in place (e.g. amplitude rescaling between steps).
    /// Invalidates the FSAL slope; dense output of the already accepted step
    /// is unaffected.
    pub fn mutate_state(&mut self, edit: impl FnOnce(&mut [Complex64])) {
        edit(&mut self.y);
        self.fsal_valid = false;
    }

    fn error_norm(&self, y_new: &[Complex64], err: &[Complex64]) -> f64 {
        let n = self.y.len().max(1);
        let mut acc = 0.0;
        for i in 0..self.y.len() {
            let scale =
                self.ctrl.atol + self.ctrl.rtol * self.y[i].norm().max(y_new[i].norm());
            let e = err[i].norm() / scale;
            acc += e * e;
        }
        (acc / n as f64).sqrt()
    }

    fn initial_step(&mut self, t_end: f64) -> f64 {
        let dir = (t_end - self.t).signum();
        let (atol, rtol) = (self.ctrl.atol, self.ctrl.rtol);
        let sc = move |y: Complex64| atol + rtol * y.norm();
        let d0 = (self
            .y
            .iter()
            .map(|&v| (v.norm() / sc(v)).powi(2))
            .sum::<f64>()
            / self.y.len().max(1) as f64)
            .sqrt();
        let d1 = (self
            .y
            .iter()
            .zip(&self.k[0])
            .map(|(&v, &f)| (f.norm() / sc(v)).powi(2))
            .sum::<f64>()
            / self.y.len().max(1) as f64)
            .sqrt();
        let h0 = if d0 < 1e-5 || d1 < 1e-5 {
            1e-6
        } else {
            0.01 * d0 / d1
        };
        let h0 = h0.min((t_end - self.t).abs());
        // One explicit Euler probe to estimate the second derivative.
        for i in 0..self.y.len() {
            self.work[i] = self.y[i] + h0 * dir * self.k[0][i];
        }
        let mut f1 = vec![Complex64::default(); self.y.len()];
        (self.f)(self.t + h0 * dir, &self.work, &mut f1);
        self.stats.rhs_evaluations += 1;
        let d2 = (self
            .y
            .iter()
            .zip(self.k[0].iter().zip(&f1))
            .map(|(&v, (&f0, &fe))| ((fe - f0).norm() / sc(v)).powi(2))
            .sum::<f64>()
            / self.y.len().max(1) as f64)
            .sqrt()
            / h0;
        let d_max = d1.max(d2);
        let h1 = if d_max <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d_max).powf(0.2)
        };
        (100.0 * h0).min(h1).min((t_end - self.t).abs())
    }

    /// Advance by one accepted step toward `t_end` (the step is clamped so
    /// it never overshoots). Returns `true` once `t_end` is reached.
    pub fn step(&mut self, t_end: f64) -> Result<bool> {
        if self.t == t_end {
            return Ok(true);
        }
        let dir = (t_end - self.t).signum();
        let n = self.y.len();

        if !self.fsal_valid {
            (self.f)(self.t, &self.y, &mut self.k[0]);
            self.stats.rhs_evaluations += 1;
            self.fsal_valid = true;
        }
        if self.h == 0.0 {
            self.h = self.initial_step(t_end).max(self.ctrl.h_min);
        }
        if let Some(h_max) = self.ctrl.h_max {
            self.h = self.h.min(h_max);
        }

        loop {
            if self.stats.steps_accepted + self.stats.steps_rejected >= self.ctrl.max_steps {
                return Err(PtsbError::IntegrationAborted {
                    t: self.t,
                    reason: format!("step budget {} exhausted", self.ctrl.max_steps),
                });
            }
            let mut h = self.h.min((t_end - self.t).abs()).max(self.ctrl.h_min);
            let clamped_to_end = h >= (t_end - self.t).abs();
            if clamped_to_end {
                h = (t_end - self.t).abs();
            }
            let hs = h * dir;

            // Stages 2..7; stage 7 lands on y_new (FSAL).
            let rows: [&[f64]; 6] = [&A2, &A3, &A4, &A5, &A6, &A7];
            for (s, row) in rows.iter().enumerate() {
                for i in 0..n {
                    let mut acc = Complex64::default();
                    for (j, &a) in row.iter().enumerate() {
                        if a != 0.0 {
                            acc += a * self.k[j][i];
                        }
                    }
                    self.work[i] = self.y[i] + hs * acc;
                }
                let t_stage = self.t + C[s + 1] * hs;
                (self.f)(t_stage, &self.work, &mut self.k[s + 1]);
                self.stats.rhs_evaluations += 1;
            }
            // self.work now holds y_new (stage 7 argument), k[6] = f(t+h, y_new).
            let mut err_vec = vec![Complex64::default(); n];
            for i in 0..n {
                let mut acc = Complex64::default();
                for (j, &e) in E.iter().enumerate() {
                    if e != 0.0 {
                        acc += e * self.k[j][i];
                    }
                }
                err_vec[i] = hs * acc;
            }
            let err = self.error_norm(&self.work, &err_vec);

            if !err.is_finite() {
                self.stats.steps_rejected += 1;
                self.h = h * 0.25;
                if self.h < self.ctrl.h_min {
                    return Err(PtsbError::IntegrationAborted {
                        t: self.t,
                        reason: "non-finite error estimate at minimal step".into(),
                    });
                }
                continue;
            }

            if err <= 1.0 {
                // Dense-output coefficients before shifting state.
                for i in 0..n {
                    let dy = self.work[i] - self.y[i];
                    self.cont[0][i] = self.y[i];
                    self.cont[1][i] = dy;
                    self.cont[2][i] = hs * self.k[0][i] - dy;
                    self.cont[3][i] = dy - hs * self.k[6][i] - self.cont[2][i];
                    let mut acc = Complex64::default();
                    for (j, &d) in D.iter().enumerate() {
                        if d != 0.0 {
                            acc += d * self.k[j][i];
                        }
                    }
                    self.cont[4][i] = hs * acc;
                }
                self.t_old = self.t;
                self.h_old = hs;
                self.t = if clamped_to_end { t_end } else { self.t + hs };
                std::mem::swap(&mut self.y, &mut self.work);
                self.k.swap(0, 6); // FSAL
                self.fsal_valid = true;
                self.stats.steps_accepted += 1;

                if !clamped_to_end {
                    let fac = (0.9 * err.max(1e-30).powf(-0.2)).clamp(0.2, 5.0);
                    self.h = h * fac;
                }
                return Ok(self.t == t_end);
            }

            self.stats.steps_rejected += 1;
            let fac = (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
            self.h = h * fac;
            if self.h < self.ctrl.h_min {
                return Err(PtsbError::IntegrationAborted {
                    t: self.t,
                    reason: format!("step size underflow ({:.3e})", self.h),
                });
            }
        }
    }

    /// Evaluate the dense interpolant at `t` inside the last accepted step.
    pub fn dense(&self, t: f64, out: &mut [Complex64]) {
        debug_assert!(self.h_old != 0.0, "no accepted step yet");
        let theta = (t - self.t_old) / self.h_old;
        let theta1 = 1.0 - theta;
        for i in 0..out.len() {
            out[i] = self.cont[0][i]
                + theta
                    * (self.cont[1][i]
                        + theta1
                            * (self.cont[2][i]
                                + theta * (self.cont[3][i] + theta1 * self.cont[4][i])));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn exponential_decay() {
        let ctrl = StepControl {
            rtol: 1e-10,
            atol: 1e-12,
            ..Default::default()
        };
        let mut solver = Dopri5::new(
            |_t, y, dy| dy[0] = -y[0],
            0.0,
            vec![c(1.0, 0.0)],
            ctrl,
        );
        while !solver.step(5.0).unwrap() {}
        let exact = (-5.0f64).exp();
        assert!((solver.y()[0].re - exact).abs() < 1e-9);
        assert!(solver.y()[0].im.abs() < 1e-12);
    }

    #[test]
    fn oscillator_phase_and_norm() {
        let omega = 3.0;
        let ctrl = StepControl {
            rtol: 1e-11,
            atol: 1e-13,
            ..Default::default()
        };
        let mut solver = Dopri5::new(
            move |_t, y, dy| dy[0] = c(0.0, -omega) * y[0],
            0.0,
            vec![c(1.0, 0.0)],
            ctrl,
        );
        while !solver.step(20.0).unwrap() {}
        let exact = c(0.0, -omega * 20.0).exp();
        assert!((solver.y()[0] - exact).norm() < 1e-8);
    }

    #[test]
    fn dense_output_matches_exact_solution_inside_step() {
        let ctrl = StepControl {
            rtol: 1e-10,
            atol: 1e-12,
            ..Default::default()
        };
        let mut solver = Dopri5::new(
            |_t, y, dy| dy[0] = c(0.0, -1.0) * y[0],
            0.0,
            vec![c(1.0, 0.0)],
            ctrl,
        );
        let mut probe = vec![c(0.0, 0.0)];
        while !solver.step(10.0).unwrap() {
            let mid = 0.5 * (solver.t_old() + solver.t());
            solver.dense(mid, &mut probe);
            let exact = c(0.0, -mid).exp();
            assert!((probe[0] - exact).norm() < 1e-9, "at t={mid}");
        }
    }

    #[test]
    fn aborts_on_nan() {
        let mut solver = Dopri5::new(
            |t, _y, dy| dy[0] = if t > 0.5 { c(f64::NAN, 0.0) } else { c(1.0, 0.0) },
            0.0,
            vec![c(0.0, 0.0)],
            StepControl::default(),
        );
        let mut result = Ok(false);
        for _ in 0..100_000 {
            result = solver.step(2.0);
            if matches!(result, Err(_) | Ok(true)) {
                break;
            }
        }
        assert!(result.is_err(), "expected abort, got {result:?}");
    }

    #[test]
    fn stiff_tolerance_change_tracks_error() {
        // Halving the tolerances must not change the endpoint by more than
        // the coarser tolerance.
        let run = |rtol: f64| {
            let ctrl = StepControl {
                rtol,
                atol: rtol * 1e-2,
                ..Default::default()
            };
            let mut solver = Dopri5::new(
                |t, y, dy| dy[0] = c(t.sin(), 0.2) * y[0],
                0.0,
                vec![c(1.0, 0.5)],
                ctrl,
            );
            while !solver.step(3.0).unwrap() {}
            solver.y()[0]
        };
        let coarse = run(1e-8);
        let fine = run(1e-12);
        assert!((coarse - fine).norm() < 1e-6);
    }
}
