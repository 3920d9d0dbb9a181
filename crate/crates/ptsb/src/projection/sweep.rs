//! Continuation sweeps over λ or ε and exceptional-point location.
//!
//! Each grid point is seeded by the previous converged solution; baths that
//! depend on the sweep variable (every scheme couples through λ) are rebuilt
//! per point. Once the tracked branch develops an imaginary part beyond the
//! detection threshold, its PT partner is reported alongside it so both
//! members of the complex-conjugate pair appear in the output.
//!
//! The exceptional point is located by the imaginary-onset criterion: the
//! first grid interval across which |Im E| crosses δ_ep is refined by
//! bisection, re-solving at midpoints seeded from the nearest converged
//! bracket endpoint.

use num_complex::Complex64;

use crate::bath::{
    discretize_linear_finite, discretize_uniform, discretize_wilson, single_mode, DiscreteBath,
};
use crate::error::{PtsbError, Result};
use crate::model::ModelParams;

use super::{
    evaluate_residuals, qubit_seed, solve_selfconsistent, Branch, EigenSolution,
    ProjectionState, SolveOptions,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Lambda,
    Eps,
}

impl SweepAxis {
    pub fn label(self) -> &'static str {
        match self {
            SweepAxis::Lambda => "lambda",
            SweepAxis::Eps => "eps",
        }
    }
}

/// Recipe for building the bath at each sweep point.
///
/// `SingleMode` is the quantum Rabi bath, whose coupling is λ itself.
#[derive(Debug, Clone)]
pub enum BathSpec {
    Wilson { lambda_disc: f64, m: usize },
    Uniform { m: usize, omega_max: f64 },
    LinearFinite { m: usize, omega_1: f64, omega_m: f64 },
    SingleMode { omega_0: f64 },
    Fixed(DiscreteBath),
}

impl BathSpec {
    pub fn build(&self, p: &ModelParams) -> Result<DiscreteBath> {
        match *self {
            BathSpec::Wilson { lambda_disc, m } => discretize_wilson(p, lambda_disc, m),
            BathSpec::Uniform { m, omega_max } => discretize_uniform(p, m, omega_max),
            BathSpec::LinearFinite {
                m,
                omega_1,
                omega_m,
            } => discretize_linear_finite(p, m, omega_1, omega_m),
            BathSpec::SingleMode { omega_0 } => single_mode(omega_0, p.lambda),
            BathSpec::Fixed(ref bath) => Ok(bath.clone()),
        }
    }

    pub fn mode_count(&self, p: &ModelParams) -> Result<usize> {
        Ok(self.build(p)?.len())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SweepOptions {
    pub solve: SolveOptions,
    /// |Im E| threshold separating the unbroken from the broken phase.
    pub delta_ep: f64,
    /// Seed nudge (1 + i·nudge) applied along the continuation so the
    /// iteration can leave the PT-symmetric manifold past the EP.
    pub nudge: f64,
    /// Bisection stops when the bracket is narrower than
    /// `ep_rel_width·(grid span)` or `ep_abs_width`, whichever is smaller.
    pub ep_rel_width: f64,
    pub ep_abs_width: Option<f64>,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            solve: SolveOptions::default(),
            delta_ep: 1e-6,
            nudge: 1e-6,
            ep_rel_width: 1e-4,
            ep_abs_width: None,
        }
    }
}

/// One converged (or flagged) point of a sweep.
#[derive(Debug, Clone)]
pub struct BranchPoint {
    pub x: f64,
    pub branch: usize,
    pub energy: Complex64,
    pub residual: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// Sweep output: the reported points plus the converged variational states
/// (aligned with `points`), kept for re-seeding during EP refinement.
#[derive(Debug, Clone)]
pub struct SweepResult {
    pub points: Vec<BranchPoint>,
    pub states: Vec<Option<ProjectionState>>,
}

impl SweepResult {
    /// Points of one branch, in grid order.
    pub fn branch(&self, branch: usize) -> impl Iterator<Item = &BranchPoint> {
        self.points.iter().filter(move |pt| pt.branch == branch)
    }
}

#[derive(Debug, Clone)]
pub struct EpEstimate {
    pub axis: SweepAxis,
    pub x_lo: f64,
    pub x_hi: f64,
    /// Midpoint of the refined bracket.
    pub x_star: f64,
    /// Detection criterion; always the imaginary-onset rule here.
    pub detection: &'static str,
    /// One-sided slope gap of Re E across the original grid bracket.
    pub slope_gap: Option<f64>,
    /// Midpoint solves that failed during refinement (flagged, not fatal).
    pub midpoint_failures: usize,
}

#[derive(Debug, Clone)]
pub enum EpOutcome {
    Found(EpEstimate),
    /// The sweep never left the unbroken phase (not an error).
    NoCrossing,
}

/// Continuation sweep driver for one model family.
#[derive(Debug, Clone)]
pub struct Sweeper {
    pub params: ModelParams,
    pub bath: BathSpec,
    pub axis: SweepAxis,
    pub opts: SweepOptions,
}

impl Sweeper {
    pub fn new(params: ModelParams, bath: BathSpec, axis: SweepAxis) -> Self {
        Self {
            params,
            bath,
            axis,
            opts: SweepOptions::default(),
        }
    }

    pub fn with_options(mut self, opts: SweepOptions) -> Self {
        self.opts = opts;
        self
    }

    /// Model parameters at sweep coordinate x.
    pub fn params_at(&self, x: f64) -> Result<ModelParams> {
        let mut p = self.params;
        match self.axis {
            SweepAxis::Lambda => p.lambda = x,
            SweepAxis::Eps => p.eps = x,
        }
        p.validated()
    }

    /// Solve at coordinate x from the given seed (bath rebuilt for x).
    pub fn solve_at(&self, x: f64, seed: &ProjectionState, nudge: bool) -> Result<EigenSolution> {
        let p = self.params_at(x)?;
        let bath = self.bath.build(&p)?;
        let opts = SolveOptions {
            r_nudge: if nudge { Some(self.opts.nudge) } else { None },
            ..self.opts.solve
        };
        solve_selfconsistent(&p, &bath, seed, &opts)
    }

    fn analytic_seed(&self, x: f64, branch: Branch) -> Result<ProjectionState> {
        let p = self.params_at(x)?;
        let n = self.bath.mode_count(&p)?;
        Ok(qubit_seed(&p, n, branch))
    }

    /// Solve at x from an ensemble of seeds (continuation with both nudge
    /// signs and a strong symmetry-breaking kick, plus the analytic
    /// bare-qubit guess scaled to this point) and collect the distinct
    /// converged roots ordered by (Re, Im).
    pub fn solve_ensemble(
        &self,
        x: f64,
        carry: Option<&ProjectionState>,
        branch: Branch,
    ) -> Result<Vec<EigenSolution>> {
        let mut attempts: Vec<(ProjectionState, f64)> = Vec::new();
        if let Some(c) = carry {
            attempts.push((c.clone(), self.opts.nudge));
            attempts.push((c.clone(), -self.opts.nudge));
            attempts.push((c.clone(), 0.05));
        }
        let analytic = self.analytic_seed(x, branch)?;
        attempts.push((analytic.clone(), self.opts.nudge));
        attempts.push((analytic, 0.05));

        let p = self.params_at(x)?;
        let bath = self.bath.build(&p)?;
        let mut roots: Vec<EigenSolution> = Vec::new();
        for (seed, nudge) in &attempts {
            let opts = SolveOptions {
                r_nudge: Some(*nudge),
                ..self.opts.solve
            };
            let Ok(sol) = solve_selfconsistent(&p, &bath, seed, &opts) else {
                continue;
            };
            let fresh = !roots
                .iter()
                .any(|r| (r.state.energy - sol.state.energy).norm() <= 100.0 * self.opts.solve.tol);
            if fresh {
                roots.push(sol);
            }
        }
        roots.sort_by(|a, b| spectral_order(&a.state.energy, &b.state.energy));
        Ok(roots)
    }

    /// Track one branch across the grid by continuation. The lower branch
    /// always takes the root of smallest real part; the upper branch keeps
    /// continuity with its previous energy while avoiding the lower root.
    /// Points where every seed fails are flagged and the continuation
    /// restarts from the analytic guess at the next point.
    fn run_branch(
        &self,
        grid: &[f64],
        branch: Branch,
        branch_id: usize,
        avoid: Option<&[Complex64]>,
    ) -> Result<SweepResult> {
        let mut points = Vec::with_capacity(grid.len());
        let mut states: Vec<Option<ProjectionState>> = Vec::with_capacity(grid.len());
        let mut carry: Option<ProjectionState> = None;
        for (idx, &x) in grid.iter().enumerate() {
            let mut roots = self.solve_ensemble(x, carry.as_ref(), branch)?;
            if let Some(avoid_energies) = avoid {
                let reference = avoid_energies[idx];
                if reference.is_finite() {
                    roots.retain(|r| {
                        (r.state.energy - reference).norm() > 100.0 * self.opts.solve.tol
                    });
                }
            }
            let chosen = match branch {
                Branch::Lower => roots.into_iter().next(),
                Branch::Upper => {
                    let reference = carry.as_ref().map(|c| c.energy);
                    match reference {
                        Some(e) => roots.into_iter().min_by(|a, b| {
                            (a.state.energy - e)
                                .norm()
                                .total_cmp(&(b.state.energy - e).norm())
                        }),
                        None => roots.into_iter().next(),
                    }
                }
            };
            match chosen {
                Some(sol) => {
                    points.push(BranchPoint {
                        x,
                        branch: branch_id,
                        energy: sol.state.energy,
                        residual: sol.residual,
                        converged: true,
                        iterations: sol.iterations,
                    });
                    carry = Some(sol.state.clone());
                    states.push(Some(sol.state));
                }
                None => {
                    points.push(BranchPoint {
                        x,
                        branch: branch_id,
                        energy: Complex64::new(f64::NAN, f64::NAN),
                        residual: f64::NAN,
                        converged: false,
                        iterations: self.opts.solve.max_iter,
                    });
                    carry = None;
                    states.push(None);
                }
            }
        }
        self.repair_failed_points(grid, branch, &mut points, &mut states)?;
        Ok(SweepResult { points, states })
    }

    /// Re-solve flagged points seeded from the nearest converged neighbor on
    /// either side (backward continuation across the exceptional point),
    /// sweeping until no further point can be repaired.
    fn repair_failed_points(
        &self,
        grid: &[f64],
        branch: Branch,
        points: &mut [BranchPoint],
        states: &mut [Option<ProjectionState>],
    ) -> Result<()> {
        loop {
            let mut progressed = false;
            for i in 0..grid.len() {
                if points[i].converged {
                    continue;
                }
                let left = (0..i).rev().find(|&j| states[j].is_some());
                let right = (i + 1..grid.len()).find(|&j| states[j].is_some());
                for neighbor in [right, left].into_iter().flatten() {
                    let seed = states[neighbor].clone().expect("converged neighbor");
                    let roots = self.solve_ensemble(grid[i], Some(&seed), branch)?;
                    let chosen = match branch {
                        Branch::Lower => roots.into_iter().next(),
                        Branch::Upper => roots.into_iter().min_by(|a, b| {
                            (a.state.energy - seed.energy)
                                .norm()
                                .total_cmp(&(b.state.energy - seed.energy).norm())
                        }),
                    };
                    if let Some(sol) = chosen {
                        points[i] = BranchPoint {
                            x: grid[i],
                            branch: points[i].branch,
                            energy: sol.state.energy,
                            residual: sol.residual,
                            converged: true,
                            iterations: sol.iterations,
                        };
                        states[i] = Some(sol.state);
                        progressed = true;
                        break;
                    }
                }
            }
            if !progressed {
                return Ok(());
            }
        }
    }

    /// Continuum-style sweep: the lowest branch, plus its PT partner at
    /// every point past the imaginary onset so the conjugate pair is
    /// reported. The partner is obtained from the exact PT map and verified
    /// by residual substitution.
    pub fn run(&self, grid: &[f64]) -> Result<SweepResult> {
        check_grid(grid)?;
        let base = self.run_branch(grid, Branch::Lower, 0, None)?;
        let mut points = Vec::new();
        let mut states = Vec::new();
        for (pt, st) in base.points.into_iter().zip(base.states) {
            let broken = pt.converged && pt.energy.im.abs() >= self.opts.delta_ep;
            let x = pt.x;
            points.push(pt);
            states.push(st.clone());
            if !broken {
                continue;
            }
            let state = st.expect("converged point carries its state");
            let partner = state.pt_partner();
            let p = self.params_at(x)?;
            let bath = self.bath.build(&p)?;
            let residual = evaluate_residuals(&p, &bath, &partner)?.max_norm();
            points.push(BranchPoint {
                x,
                branch: 1,
                energy: partner.energy,
                residual,
                converged: residual <= self.opts.solve.tol,
                iterations: 0,
            });
            states.push(Some(partner));
        }
        Ok(SweepResult { points, states })
    }

    /// Finite-mode style sweep: the two bare-qubit branches are tracked
    /// independently while real; once the lower branch turns complex the
    /// pair has coalesced, and the second member is its PT partner (the
    /// imaginary branches are identified through the symmetry rather than
    /// re-solved).
    pub fn run_two_branches(&self, grid: &[f64]) -> Result<SweepResult> {
        check_grid(grid)?;
        let lower = self.run_branch(grid, Branch::Lower, 0, None)?;
        let lower_energies: Vec<Complex64> =
            lower.points.iter().map(|pt| pt.energy).collect();
        let upper = self.run_branch(grid, Branch::Upper, 1, Some(&lower_energies))?;

        let mut points = Vec::with_capacity(2 * grid.len());
        let mut states = Vec::with_capacity(2 * grid.len());
        for i in 0..grid.len() {
            let (lo_pt, lo_st) = (&lower.points[i], &lower.states[i]);
            let (up_pt, up_st) = (&upper.points[i], &upper.states[i]);
            points.push(lo_pt.clone());
            states.push(lo_st.clone());
            let broken = lo_pt.converged && lo_pt.energy.im.abs() >= self.opts.delta_ep;
            if broken {
                let state = lo_st.as_ref().expect("converged").pt_partner();
                let p = self.params_at(lo_pt.x)?;
                let bath = self.bath.build(&p)?;
                let residual = evaluate_residuals(&p, &bath, &state)?.max_norm();
                points.push(BranchPoint {
                    x: lo_pt.x,
                    branch: 1,
                    energy: state.energy,
                    residual,
                    converged: residual <= self.opts.solve.tol,
                    iterations: 0,
                });
                states.push(Some(state));
            } else {
                points.push(up_pt.clone());
                states.push(up_st.clone());
            }
        }
        Ok(SweepResult { points, states })
    }

    /// Locate the exceptional point from a finished sweep by bisection on
    /// the imaginary-onset predicate, re-solving at midpoints.
    pub fn detect_ep(&self, sweep: &SweepResult) -> Result<EpOutcome> {
        let delta_ep = self.opts.delta_ep;
        let branch0: Vec<(usize, &BranchPoint)> = sweep
            .points
            .iter()
            .enumerate()
            .filter(|(_, pt)| pt.branch == 0 && pt.converged)
            .collect();
        if branch0.len() < 2 {
            return Err(PtsbError::InsufficientData(
                "EP detection needs at least two converged points".into(),
            ));
        }
        let grid_span = branch0.last().unwrap().1.x - branch0[0].1.x;

        let crossing = branch0
            .windows(2)
            .find(|w| w[0].1.energy.im.abs() < delta_ep && w[1].1.energy.im.abs() >= delta_ep);
        let Some(window) = crossing else {
            return Ok(EpOutcome::NoCrossing);
        };
        let (lo_idx, lo_pt) = window[0];
        let (hi_idx, hi_pt) = window[1];

        let mut lo = lo_pt.x;
        let mut hi = hi_pt.x;
        let mut lo_state = sweep.states[lo_idx].clone().expect("converged");
        let mut hi_state = sweep.states[hi_idx].clone().expect("converged");

        let mut width_target = self.opts.ep_rel_width * grid_span.abs();
        if let Some(abs) = self.opts.ep_abs_width {
            width_target = width_target.min(abs);
        }
        let mut failures = 0usize;
        let mut total_failures = 0usize;
        while hi - lo > width_target && failures < 3 {
            let mid = 0.5 * (lo + hi);
            // The lowest root decides which side of the onset we are on;
            // both bracket states feed the seed ensemble.
            let sol = match self.solve_ensemble(mid, Some(&lo_state), Branch::Lower) {
                Ok(roots) if !roots.is_empty() => Some(roots.into_iter().next().unwrap()),
                _ => match self.solve_ensemble(mid, Some(&hi_state), Branch::Lower) {
                    Ok(roots) if !roots.is_empty() => Some(roots.into_iter().next().unwrap()),
                    _ => None,
                },
            };
            match sol {
                Some(sol) => {
                    failures = 0;
                    if sol.state.energy.im.abs() >= delta_ep {
                        hi = mid;
                        hi_state = sol.state;
                    } else {
                        lo = mid;
                        lo_state = sol.state;
                    }
                }
                None => {
                    failures += 1;
                    total_failures += 1;
                }
            }
        }

        // One-sided slopes of Re E on the grid intervals flanking the
        // original bracket (diagnostic for the cusp in the real part).
        let slope_gap = {
            let left = branch0
                .iter()
                .position(|&(idx, _)| idx == lo_idx)
                .filter(|&i| i >= 1)
                .map(|i| {
                    let (a, b) = (branch0[i - 1].1, branch0[i].1);
                    (b.energy.re - a.energy.re) / (b.x - a.x)
                });
            let right = branch0
                .iter()
                .position(|&(idx, _)| idx == hi_idx)
                .filter(|&i| i + 1 < branch0.len())
                .map(|i| {
                    let (a, b) = (branch0[i].1, branch0[i + 1].1);
                    (b.energy.re - a.energy.re) / (b.x - a.x)
                });
            match (left, right) {
                (Some(l), Some(r)) => Some((r - l).abs()),
                _ => None,
            }
        };

        Ok(EpOutcome::Found(EpEstimate {
            axis: self.axis,
            x_lo: lo,
            x_hi: hi,
            x_star: 0.5 * (lo + hi),
            detection: "imaginary-onset",
            slope_gap,
            midpoint_failures: total_failures,
        }))
    }
}

fn spectral_order(a: &Complex64, b: &Complex64) -> std::cmp::Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(PtsbError::InsufficientData("empty sweep grid".into()));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(PtsbError::Domain(
            "sweep grid must be strictly ascending".into(),
        ));
    }
    Ok(())
}

/// Evenly spaced grid with `count` points on [lo, hi].
pub fn linear_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count <= 1 {
        return vec![lo];
    }
    let step = (hi - lo) / (count - 1) as f64;
    (0..count).map(|i| lo + i as f64 * step).collect()
}
