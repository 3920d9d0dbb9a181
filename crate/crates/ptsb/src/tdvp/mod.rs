//! Real-time dynamics of the asymmetric coherent-state trial state.
//!
//! The time-dependent ansatz
//!
//! ```text
//! |Ψ(t)⟩ = ( l(t)·D[α(t)]|0⟩ , r(t)·D[β(t)]|0⟩ )ᵀ
//! ```
//!
//! evolves under the Dirac-Frenkel variational equations of motion. With
//! the bath sums C_α = Σ[ω|α|² + g(α + α*)], C_β = Σ[ω|β|² - g(β + β*)]
//! and the overlap η, the imaginary-bias equations are
//!
//! ```text
//! i l̇ + (Δ/2)ηr  - l { iε/2 - (i/2)Σ(α*α̇ - α̇*α) + C_α } = 0
//! i ṙ + (Δ/2)η*l + r { iε/2 + (i/2)Σ(β*β̇ - β̇*β) - C_β } = 0
//! i l α̇_k - l(ω_k α_k + g_k) + i(εl/2)α_k - (Δrη/2)(α_k - β_k) = 0
//! i r β̇_k - r(ω_k β_k - g_k) - i(εr/2)β_k - (Δlη*/2)(β_k - α_k) = 0
//! ```
//!
//! the mode equations are solved for α̇, β̇ first and substituted into the
//! amplitude equations, making the right-hand side explicit. For the
//! Hermitian variant (real bias) the ε-terms move onto the phases of l and
//! r and drop out of the mode equations; both cases are covered by one
//! right-hand side parametrized by the bias term.
//!
//! Amplitudes in the broken phase grow exponentially, so l and r are
//! stored rescaled by a common positive factor whose logarithm accumulates
//! in [`DynState::log_scale`]; the population and occupation observables
//! are scale-invariant and the norm is reported in log form.

use num_complex::Complex64;

use crate::bath::DiscreteBath;
use crate::error::{PtsbError, Result};
use crate::model::{BiasKind, ModelParams};
use crate::ode::{Dopri5, OdeStats, StepControl};
use crate::projection::{bias_term, overlap_eta};

/// Dynamical variational state at one instant.
#[derive(Debug, Clone)]
pub struct DynState {
    pub l: Complex64,
    pub r: Complex64,
    pub alpha: Vec<Complex64>,
    pub beta: Vec<Complex64>,
    /// Accumulated log of the common amplitude rescaling factor: the
    /// physical amplitudes are (l, r)·exp(log_scale).
    pub log_scale: f64,
    pub t: f64,
}

impl DynState {
    /// The initial state |0⟩|↑⟩ with the spin-down amplitude regularized to
    /// `floor` (the mode equations divide by r).
    pub fn polarized_up(modes: usize, floor: f64) -> Self {
        Self {
            l: Complex64::new(1.0, 0.0),
            r: Complex64::new(floor, 0.0),
            alpha: vec![Complex64::default(); modes],
            beta: vec![Complex64::default(); modes],
            log_scale: 0.0,
            t: 0.0,
        }
    }

    fn flatten(&self) -> Vec<Complex64> {
        let m = self.alpha.len();
        let mut y = Vec::with_capacity(2 + 2 * m);
        y.push(self.l);
        y.push(self.r);
        y.extend_from_slice(&self.alpha);
        y.extend_from_slice(&self.beta);
        y
    }

    fn from_flat(y: &[Complex64], log_scale: f64, t: f64) -> Self {
        let m = (y.len() - 2) / 2;
        Self {
            l: y[0],
            r: y[1],
            alpha: y[2..2 + m].to_vec(),
            beta: y[2 + m..].to_vec(),
            log_scale,
            t,
        }
    }
}

/// Time derivatives of the variational parameters.
#[derive(Debug, Clone)]
pub struct DynDerivative {
    pub dl: Complex64,
    pub dr: Complex64,
    pub dalpha: Vec<Complex64>,
    pub dbeta: Vec<Complex64>,
    /// Set when |l| or |r| sat below the regularization floor.
    pub floor_hit: bool,
}

fn rhs_flat(
    p: &ModelParams,
    bath: &DiscreteBath,
    floor: f64,
    y: &[Complex64],
    dy: &mut [Complex64],
) -> bool {
    let m = bath.len();
    let (l, r) = (y[0], y[1]);
    let alpha = &y[2..2 + m];
    let beta = &y[2 + m..2 + 2 * m];
    let floor_hit = l.norm() < floor || r.norm() < floor;

    let eta = overlap_eta(alpha, beta);
    let bias = bias_term(p);
    // ε/2 for the imaginary bias, 0 for the real one.
    let damp = (Complex64::new(0.0, -1.0) * bias).re;

    let mut c_alpha = 0.0;
    let mut c_beta = 0.0;
    for (mode, (al, be)) in bath.modes().iter().zip(alpha.iter().zip(beta)) {
        c_alpha += mode.omega * al.norm_sqr() + 2.0 * mode.g * al.re;
        c_beta += mode.omega * be.norm_sqr() - 2.0 * mode.g * be.re;
    }

    let i = Complex64::new(0.0, 1.0);
    let couple_a = -i * 0.5 * p.delta * r * eta / l;
    let couple_b = -i * 0.5 * p.delta * l * eta.conj() / r;

    let mut pair_a = Complex64::default(); // Σ α*·α̇
    let mut pair_b = Complex64::default(); // Σ β*·β̇
    for (k, mode) in bath.modes().iter().enumerate() {
        let al = alpha[k];
        let be = beta[k];
        let da = -i * (mode.omega * al + mode.g) - damp * al + couple_a * (al - be);
        let db = -i * (mode.omega * be - mode.g) + damp * be + couple_b * (be - al);
        dy[2 + k] = da;
        dy[2 + m + k] = db;
        pair_a += al.conj() * da;
        pair_b += be.conj() * db;
    }

    // (1/2)Σ(α*α̇ - α̇*α) = i·Im Σ α*α̇
    let half_s_alpha = i * pair_a.im;
    let half_s_beta = i * pair_b.im;
    dy[0] = i * 0.5 * p.delta * eta * r + l * (-i * bias - i * c_alpha - half_s_alpha);
    dy[1] = i * 0.5 * p.delta * eta.conj() * l + r * (i * bias - i * c_beta - half_s_beta);
    floor_hit
}

/// Time derivatives of (l, r, α, β) with the mode equations substituted
/// into the amplitude equations. The overlap η is recomputed from the
/// current displacements on every call; amplitudes below the default
/// regularization floor set the flag.
pub fn eom_rhs(p: &ModelParams, bath: &DiscreteBath, st: &DynState) -> DynDerivative {
    let y = st.flatten();
    let mut dy = vec![Complex64::default(); y.len()];
    let floor_hit = rhs_flat(p, bath, 1e-8, &y, &mut dy);
    let m = bath.len();
    DynDerivative {
        dl: dy[0],
        dr: dy[1],
        dalpha: dy[2..2 + m].to_vec(),
        dbeta: dy[2 + m..].to_vec(),
        floor_hit,
    }
}

/// Un-normalized Hamiltonian expectation ⟨Ψ|H|Ψ⟩ at the stored amplitude
/// scale:
///
/// ```text
/// ⟨H⟩ = |l|²C_α + |r|²C_β - (Δ/2)(l*rη + r*lη*) + b(|l|² - |r|²).
/// ```
///
/// Callers report ⟨H⟩/𝒩, in which the rescaling factor cancels.
pub fn energy_expectation(p: &ModelParams, bath: &DiscreteBath, st: &DynState) -> Complex64 {
    let eta = overlap_eta(&st.alpha, &st.beta);
    let mut c_alpha = 0.0;
    let mut c_beta = 0.0;
    for (mode, (al, be)) in bath.modes().iter().zip(st.alpha.iter().zip(&st.beta)) {
        c_alpha += mode.omega * al.norm_sqr() + 2.0 * mode.g * al.re;
        c_beta += mode.omega * be.norm_sqr() - 2.0 * mode.g * be.re;
    }
    let ll = st.l.norm_sqr();
    let rr = st.r.norm_sqr();
    let cross = st.l.conj() * st.r * eta;
    ll * c_alpha + rr * c_beta - 0.5 * p.delta * (cross + cross.conj())
        + bias_term(p) * (ll - rr)
}

/// Scale-invariant observables of a state.
#[derive(Debug, Clone, Copy)]
pub struct Observables {
    /// Population difference ⟨s_z⟩ = (|l|² - |r|²)/(|l|² + |r|²) ∈ [-1, 1].
    pub s_z: f64,
    /// Average boson number (|l|²Σ|α|² + |r|²Σ|β|²)/(|l|² + |r|²) ≥ 0.
    pub n_b: f64,
    /// Norm at the stored scale, |l|² + |r|².
    pub norm_stored: f64,
    /// ln 𝒩 including the accumulated rescaling factor.
    pub log_norm: f64,
}

pub fn observables(st: &DynState) -> Observables {
    let ll = st.l.norm_sqr();
    let rr = st.r.norm_sqr();
    let norm = ll + rr;
    let occ_a: f64 = st.alpha.iter().map(|z| z.norm_sqr()).sum();
    let occ_b: f64 = st.beta.iter().map(|z| z.norm_sqr()).sum();
    Observables {
        s_z: (ll - rr) / norm,
        n_b: (ll * occ_a + rr * occ_b) / norm,
        norm_stored: norm,
        log_norm: norm.ln() + 2.0 * st.log_scale,
    }
}

/// One recorded sample of a trajectory.
#[derive(Debug, Clone, Copy)]
pub struct TrajRow {
    pub t: f64,
    pub s_z: f64,
    pub n_b: f64,
    pub log_norm: f64,
    pub re_h_over_n: f64,
    pub im_h_over_n: f64,
    /// |central-difference d𝒩/dt - rate·(|l|²-|r|²)| / max 𝒩 at this sample
    /// (zero at the endpoints, where no centered difference exists).
    pub dnorm_residual: f64,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct IntegratorStats {
    pub steps_accepted: usize,
    pub steps_rejected: usize,
    pub rhs_evaluations: usize,
    pub rescales: usize,
    pub amplitude_floor_hits: usize,
}

impl From<OdeStats> for IntegratorStats {
    fn from(s: OdeStats) -> Self {
        Self {
            steps_accepted: s.steps_accepted,
            steps_rejected: s.steps_rejected,
            rhs_evaluations: s.rhs_evaluations,
            rescales: 0,
            amplitude_floor_hits: 0,
        }
    }
}

/// Time series of observables plus integrator metadata.
#[derive(Debug, Clone)]
pub struct TrajectoryRecord {
    pub rows: Vec<TrajRow>,
    pub stats: IntegratorStats,
    /// Sampling stride in time units.
    pub sample_dt: f64,
    pub recurrence_time: Option<f64>,
    /// Set when the requested horizon reached or passed the recurrence time.
    pub recurrence_exceeded: bool,
    pub reg_floor: f64,
    /// Final state at t_end.
    pub final_state: DynState,
}

#[derive(Debug, Clone, Copy)]
pub struct IntegrateOptions {
    pub ctrl: StepControl,
    /// Observable sampling interval.
    pub sample_dt: f64,
    /// Regularization floor for |l|, |r| (flagging only).
    pub reg_floor: f64,
    /// Rescale l, r to unit norm whenever |l|²+|r|² leaves
    /// [1/threshold, threshold].
    pub rescale_threshold: f64,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        Self {
            ctrl: StepControl::default(),
            sample_dt: 0.1,
            reg_floor: 1e-8,
            rescale_threshold: 1e8,
        }
    }
}

/// Integrate the equations of motion up to `t_end`, sampling observables on
/// a uniform grid via dense output.
pub fn integrate(
    p: &ModelParams,
    bath: &DiscreteBath,
    init: &DynState,
    t_end: f64,
    opts: &IntegrateOptions,
) -> Result<TrajectoryRecord> {
    if t_end <= init.t {
        return Err(PtsbError::Domain(format!(
            "t_end = {t_end} must exceed the initial time {}",
            init.t
        )));
    }
    let recurrence_time = bath.recurrence_time();
    let recurrence_exceeded = recurrence_time.is_some_and(|tp| t_end >= tp);

    let mut log_scale = init.log_scale;
    let mut rescales = 0usize;

    let floor = opts.reg_floor;
    let pp = *p;
    let floor_cell = std::cell::Cell::new(0usize);
    let mut solver = Dopri5::new(
        |_t, y: &[Complex64], dy: &mut [Complex64]| {
            if rhs_flat(&pp, bath, floor, y, dy) {
                floor_cell.set(floor_cell.get() + 1);
            }
        },
        init.t,
        init.flatten(),
        opts.ctrl,
    );

    let n_samples = ((t_end - init.t) / opts.sample_dt).round().max(1.0) as usize;
    let mut sample_times: Vec<f64> = (0..=n_samples)
        .map(|i| init.t + i as f64 * opts.sample_dt)
        .collect();
    if *sample_times.last().unwrap() < t_end - 1e-12 * t_end.abs().max(1.0) {
        sample_times.push(t_end);
    } else {
        *sample_times.last_mut().unwrap() = t_end;
    }

    let mut rows: Vec<(f64, f64, f64, f64, Complex64, f64)> =
        Vec::with_capacity(sample_times.len());
    {
        let st = DynState::from_flat(solver.y(), log_scale, init.t);
        let obs = observables(&st);
        let h = energy_expectation(p, bath, &st);
        rows.push((init.t, obs.s_z, obs.n_b, obs.log_norm, h, obs.norm_stored));
    }

    let mut next_sample = 1usize;
    let mut probe = vec![Complex64::default(); solver.y().len()];
    loop {
        let done = solver.step(t_end)?;
        if !solver
            .y()
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
        {
            return Err(PtsbError::IntegrationAborted {
                t: solver.t(),
                reason: "non-finite state".into(),
            });
        }
        while next_sample < sample_times.len() && sample_times[next_sample] <= solver.t() {
            let ts = sample_times[next_sample];
            solver.dense(ts, &mut probe);
            let st = DynState::from_flat(&probe, log_scale, ts);
            let obs = observables(&st);
            let h = energy_expectation(p, bath, &st);
            rows.push((ts, obs.s_z, obs.n_b, obs.log_norm, h, obs.norm_stored));
            next_sample += 1;
        }
        // Rescale between steps; samples above used the old scale and
        // log_norm is continuous across the change.
        let norm = solver.y()[0].norm_sqr() + solver.y()[1].norm_sqr();
        if norm > opts.rescale_threshold || norm < 1.0 / opts.rescale_threshold {
            let s = norm.sqrt();
            solver.mutate_state(|y| {
                y[0] /= s;
                y[1] /= s;
            });
            log_scale += s.ln();
            rescales += 1;
        }
        if done {
            break;
        }
    }

    let rate = match p.bias {
        BiasKind::Imaginary => p.eps,
        BiasKind::Real => 0.0,
    };
    let traj_rows = finalize_rows(&rows, opts.sample_dt, rate);

    let mut stats = IntegratorStats::from(solver.stats);
    stats.rescales = rescales;
    stats.amplitude_floor_hits = floor_cell.get();

    let final_state = DynState::from_flat(solver.y(), log_scale, solver.t());
    Ok(TrajectoryRecord {
        rows: traj_rows,
        stats,
        sample_dt: opts.sample_dt,
        recurrence_time,
        recurrence_exceeded,
        reg_floor: opts.reg_floor,
        final_state,
    })
}

/// Assemble rows, filling the norm-flow residual by centered differences of
/// 𝒩 against rate·(|l|² - |r|²) = rate·s_z·𝒩, everything normalized by the
/// largest 𝒩 of the run (evaluated through exp(log-norm differences) so
/// exponential growth cannot overflow).
fn finalize_rows(
    raw: &[(f64, f64, f64, f64, Complex64, f64)],
    sample_dt: f64,
    rate: f64,
) -> Vec<TrajRow> {
    let log_max = raw.iter().map(|r| r.3).fold(f64::NEG_INFINITY, f64::max);
    let mut rows: Vec<TrajRow> = raw
        .iter()
        .map(|&(t, s_z, n_b, log_norm, h, norm_stored)| TrajRow {
            t,
            s_z,
            n_b,
            log_norm,
            re_h_over_n: h.re / norm_stored,
            im_h_over_n: h.im / norm_stored,
            dnorm_residual: 0.0,
        })
        .collect();
    let n = rows.len();
    for i in 1..n.saturating_sub(1) {
        let up = (rows[i + 1].log_norm - log_max).exp();
        let mid = (rows[i].log_norm - log_max).exp();
        let down = (rows[i - 1].log_norm - log_max).exp();
        let cd = (up - down) / (2.0 * sample_dt);
        let target = rate * rows[i].s_z * mid;
        rows[i].dnorm_residual = (cd - target).abs();
    }
    rows
}

/// Max norm-flow deviation over the interior samples of a trajectory:
/// the centered difference of 𝒩 must follow d𝒩/dt = ε(|l|² - |r|²) for the
/// imaginary bias and d𝒩/dt = 0 for the Hermitian model, relative to the
/// largest 𝒩 of the run.
pub fn norm_flow_check(traj: &TrajectoryRecord, p: &ModelParams) -> Result<f64> {
    if traj.rows.len() < 3 {
        return Err(PtsbError::InsufficientData(
            "norm-flow check needs at least three samples".into(),
        ));
    }
    let rate = match p.bias {
        BiasKind::Imaginary => p.eps,
        BiasKind::Real => 0.0,
    };
    let log_max = traj
        .rows
        .iter()
        .map(|r| r.log_norm)
        .fold(f64::NEG_INFINITY, f64::max);
    let h = traj.sample_dt;
    let mut worst = 0.0f64;
    for w in traj.rows.windows(3) {
        let cd = ((w[2].log_norm - log_max).exp() - (w[0].log_norm - log_max).exp()) / (2.0 * h);
        let target = rate * w[1].s_z * (w[1].log_norm - log_max).exp();
        worst = worst.max((cd - target).abs());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bath::{discretize_uniform, single_mode};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn rhs_reduces_to_bare_rabi() {
        // λ = 0, ε = 0: i l̇ = -(Δ/2) r, i ṙ = -(Δ/2) l.
        let p = ModelParams::new(0.1, 0.0, BiasKind::Imaginary, 0.0).unwrap();
        let bath = single_mode(1.0, 0.0).unwrap();
        let st = DynState {
            l: c(0.8, 0.1),
            r: c(0.2, -0.3),
            alpha: vec![Complex64::default()],
            beta: vec![Complex64::default()],
            log_scale: 0.0,
            t: 0.0,
        };
        let d = eom_rhs(&p, &bath, &st);
        assert!((d.dl - c(0.0, 0.05) * st.r).norm() < 1e-15);
        assert!((d.dr - c(0.0, 0.05) * st.l).norm() < 1e-15);
        assert!(d.dalpha[0].norm() < 1e-15);
    }

    #[test]
    fn rhs_reduces_to_nonhermitian_qubit_flow() {
        // λ = 0, ε > 0: i l̇ = (iε/2)l - (Δ/2)r, i ṙ = -(iε/2)r - (Δ/2)l.
        let p = ModelParams::new(0.1, 0.06, BiasKind::Imaginary, 0.0).unwrap();
        let bath = single_mode(1.0, 0.0).unwrap();
        let st = DynState {
            l: c(0.4, 0.2),
            r: c(-0.1, 0.5),
            alpha: vec![Complex64::default()],
            beta: vec![Complex64::default()],
            log_scale: 0.0,
            t: 0.0,
        };
        let d = eom_rhs(&p, &bath, &st);
        let i = c(0.0, 1.0);
        let want_dl = -i * (i * 0.03 * st.l - 0.05 * st.r);
        let want_dr = -i * (-i * 0.03 * st.r - 0.05 * st.l);
        assert!((d.dl - want_dl).norm() < 1e-15);
        assert!((d.dr - want_dr).norm() < 1e-15);
    }

    #[test]
    fn observables_limits() {
        let mut st = DynState::polarized_up(2, 0.0);
        st.alpha = vec![c(0.3, 0.0), c(0.0, -0.4)];
        let obs = observables(&st);
        assert_eq!(obs.s_z, 1.0);
        assert!((obs.n_b - 0.25).abs() < 1e-15);

        st.r = st.l;
        let obs = observables(&st);
        assert!(obs.s_z.abs() < 1e-15);
    }

    #[test]
    fn energy_expectation_limits() {
        let p = ModelParams::new(0.1, 0.06, BiasKind::Imaginary, 0.0).unwrap();
        let bath = single_mode(1.0, 0.0).unwrap();
        let up = DynState::polarized_up(1, 0.0);
        let h = energy_expectation(&p, &bath, &up);
        assert!((h - c(0.0, 0.03)).norm() < 1e-15);

        let p0 = ModelParams::new(0.1, 0.0, BiasKind::Imaginary, 0.0).unwrap();
        let mixed = DynState {
            l: c(1.0 / 2.0f64.sqrt(), 0.0),
            r: c(1.0 / 2.0f64.sqrt(), 0.0),
            alpha: vec![Complex64::default()],
            beta: vec![Complex64::default()],
            log_scale: 0.0,
            t: 0.0,
        };
        let h0 = energy_expectation(&p0, &bath, &mixed);
        assert!((h0 - c(-0.05, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn bare_rabi_oscillation() {
        // λ = 0, ε = 0: ⟨s_z⟩(t) = cos(Δt) from |↑⟩.
        let p = ModelParams::new(0.1, 0.0, BiasKind::Imaginary, 0.0).unwrap();
        let bath = discretize_uniform(&p, 4, 4.0).unwrap();
        let init = DynState::polarized_up(4, 1e-8);
        let opts = IntegrateOptions {
            ctrl: StepControl {
                rtol: 1e-10,
                atol: 1e-12,
                ..Default::default()
            },
            sample_dt: 0.5,
            ..Default::default()
        };
        let traj = integrate(&p, &bath, &init, 100.0, &opts).unwrap();
        for row in &traj.rows {
            assert!(
                (row.s_z - (0.1 * row.t).cos()).abs() < 1e-7,
                "t={} s_z={} cos={}",
                row.t,
                row.s_z,
                (0.1 * row.t).cos()
            );
        }
    }

    #[test]
    fn decoupled_mode_follows_closed_form() {
        // Negligible tunneling, ε = 0: the mode equation is α̇ = -i(ωα + g),
        // so from the vacuum α(t) = -(g/ω)(1 - e^{-iωt}).
        let p = ModelParams::new(1e-10, 0.0, BiasKind::Imaginary, 0.0).unwrap();
        let bath = single_mode(1.3, 0.2).unwrap();
        let init = DynState::polarized_up(1, 1e-8);
        let opts = IntegrateOptions {
            ctrl: StepControl {
                rtol: 1e-11,
                atol: 1e-13,
                ..Default::default()
            },
            sample_dt: 0.25,
            ..Default::default()
        };
        let traj = integrate(&p, &bath, &init, 30.0, &opts).unwrap();
        let st = traj.final_state;
        let i = c(0.0, 1.0);
        let expect = -(0.2 / 1.3) * (1.0 - (-i * 1.3 * 30.0).exp());
        assert!(
            (st.alpha[0] - expect).norm() < 1e-8,
            "{} vs {expect}",
            st.alpha[0]
        );
    }

    #[test]
    fn norm_flow_is_zero_for_hermitian_runs() {
        let p = ModelParams::new(0.1, 0.05, BiasKind::Real, 0.0).unwrap();
        let bath = discretize_uniform(&p, 8, 4.0).unwrap();
        let init = DynState::polarized_up(8, 1e-8);
        let opts = IntegrateOptions {
            ctrl: StepControl {
                rtol: 1e-11,
                atol: 1e-13,
                ..Default::default()
            },
            sample_dt: 0.05,
            ..Default::default()
        };
        let traj = integrate(&p, &bath, &init, 50.0, &opts).unwrap();
        let dev = norm_flow_check(&traj, &p).unwrap();
        assert!(dev <= 1e-10, "deviation {dev}");
    }

    #[test]
    fn broken_phase_norm_grows_and_rescales() {
        // Bare broken qubit ε > Δ: 𝒩 grows like e^{√(ε²-Δ²) t}; the stored
        // amplitudes must stay bounded through rescaling.
        let p = ModelParams::new(0.1, 0.4, BiasKind::Imaginary, 0.0).unwrap();
        let bath = single_mode(1.0, 0.0).unwrap();
        let init = DynState::polarized_up(1, 1e-8);
        // The centered difference needs a stride well under the growth
        // time 1/γ ≈ 2.6.
        let opts = IntegrateOptions {
            sample_dt: 0.02,
            rescale_threshold: 1e4,
            ..Default::default()
        };
        let traj = integrate(&p, &bath, &init, 120.0, &opts).unwrap();
        assert!(traj.stats.rescales > 0);
        let last = traj.rows.last().unwrap();
        let growth = (0.4f64 * 0.4 - 0.1 * 0.1).sqrt();
        assert!(
            (last.log_norm / last.t - growth).abs() < 0.05,
            "log-norm rate {} vs {growth}",
            last.log_norm / last.t
        );
        let stored = traj.final_state.l.norm_sqr() + traj.final_state.r.norm_sqr();
        assert!(stored < 1e5);
        // Norm-flow identity holds through the rescalings.
        let dev = norm_flow_check(&traj, &p).unwrap();
        assert!(dev <= 1e-4, "deviation {dev}");
    }

    #[test]
    fn recurrence_metadata() {
        let p = ModelParams::new(0.1, 0.0, BiasKind::Imaginary, 0.01).unwrap();
        let bath = discretize_uniform(&p, 16, 4.0).unwrap();
        let tp = bath.recurrence_time().unwrap();
        let init = DynState::polarized_up(16, 1e-8);
        let opts = IntegrateOptions {
            sample_dt: 1.0,
            ..Default::default()
        };
        let short = integrate(&p, &bath, &init, 5.0, &opts).unwrap();
        assert!(!short.recurrence_exceeded);
        let long = integrate(&p, &bath, &init, tp + 1.0, &opts).unwrap();
        assert!(long.recurrence_exceeded);
    }

    #[test]
    fn too_few_samples_is_an_error() {
        let p = ModelParams::new(0.1, 0.0, BiasKind::Imaginary, 0.0).unwrap();
        let bath = single_mode(1.0, 0.0).unwrap();
        let init = DynState::polarized_up(1, 1e-8);
        let opts = IntegrateOptions {
            sample_dt: 10.0,
            ..Default::default()
        };
        let traj = integrate(&p, &bath, &init, 10.0, &opts).unwrap();
        assert!(norm_flow_check(&traj, &p).is_err());
    }
}
