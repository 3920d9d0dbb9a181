//! Property and invariant tests spanning module boundaries.

use num_complex::Complex64;
use proptest::prelude::*;

use ptsb::ode::StepControl;
use ptsb::projection::{
    evaluate_residuals, linear_grid, mode_displacements, overlap_eta, qubit_seed, BathSpec,
    Branch, SweepAxis, Sweeper,
};
use ptsb::tdvp::{integrate, observables, DynState, IntegrateOptions, TrajectoryRecord};
use ptsb::{BiasKind, ModelParams};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn all_schemes_yield_positive_distinct_frequencies(
        s in 0.5f64..2.0,
        lambda in 0.0f64..1.0,
        ld in 1.05f64..2.0,
        m in 1usize..50,
    ) {
        let p = ModelParams::new(0.3, 0.1, BiasKind::Imaginary, lambda)
            .unwrap()
            .with_s(s)
            .unwrap();
        let wilson = ptsb::discretize_wilson(&p, ld, m).unwrap();
        let uniform = ptsb::discretize_uniform(&p, m, 4.0).unwrap();
        for bath in [&wilson, &uniform] {
            let mut om: Vec<f64> = bath.omegas().collect();
            prop_assert!(om.iter().all(|&w| w > 0.0));
            om.sort_by(|a, b| a.partial_cmp(b).unwrap());
            prop_assert!(om.windows(2).all(|w| w[0] < w[1]));
        }
        // Logarithmic scheme: consecutive frequency ratios equal Λ and
        // coupling-squared ratios equal Λ^{s+1}.
        for w in wilson.modes().windows(2) {
            prop_assert!((w[0].omega / w[1].omega - ld).abs() < 1e-12 * ld);
            if lambda > 0.0 {
                let ratio = (w[0].g / w[1].g).powi(2);
                prop_assert!((ratio - ld.powf(s + 1.0)).abs() < 1e-10 * ratio);
            }
        }
    }

    #[test]
    fn uniform_frequencies_are_bit_exact(m in 1usize..200, omega_max in 0.5f64..8.0) {
        let p = ModelParams::new(0.3, 0.1, BiasKind::Imaginary, 0.2).unwrap();
        let bath = ptsb::discretize_uniform(&p, m, omega_max).unwrap();
        let d_omega = omega_max / m as f64;
        for (k, mode) in bath.modes().iter().enumerate() {
            prop_assert_eq!(mode.omega, (k + 1) as f64 * d_omega);
        }
    }

    #[test]
    fn displacements_close_their_equations(
        are in -0.3f64..0.3, aim in -0.3f64..0.3,
        bre in -0.3f64..0.3, bim in -0.3f64..0.3,
        lambda in 0.01f64..0.5,
    ) {
        // Frequencies ≥ 1 keep ω(A + B + ω) away from zero for |A|,|B| ≤ 0.3√2.
        let p = ModelParams::new(0.3, 0.1, BiasKind::Imaginary, lambda).unwrap();
        let bath = ptsb::discretize_linear_finite(&p, 4, 1.0, 1.6).unwrap();
        let a = c(are, aim);
        let b = c(bre, bim);
        let (alpha, beta) = mode_displacements(a, b, &bath).unwrap();
        for (k, mode) in bath.modes().iter().enumerate() {
            let res_b = a * (alpha[k] - beta[k]) + mode.omega * alpha[k] + mode.g;
            let res_d = b * (beta[k] - alpha[k]) + mode.omega * beta[k] - mode.g;
            prop_assert!(res_b.norm() <= 1e-14 * mode.g.max(1.0));
            prop_assert!(res_d.norm() <= 1e-14 * mode.g.max(1.0));
        }
    }

    #[test]
    fn observables_stay_in_bounds(
        lre in -2.0f64..2.0, lim in -2.0f64..2.0,
        rre in -2.0f64..2.0, rim in -2.0f64..2.0,
        scale in -5.0f64..5.0,
        amps in prop::collection::vec((-1.5f64..1.5, -1.5f64..1.5), 2..12),
    ) {
        prop_assume!(lre.abs() + lim.abs() + rre.abs() + rim.abs() > 1e-6);
        let n = amps.len() / 2;
        let st = DynState {
            l: c(lre, lim),
            r: c(rre, rim),
            alpha: amps[..n].iter().map(|&(x, y)| c(x, y)).collect(),
            beta: amps[n..2 * n].iter().map(|&(x, y)| c(x, y)).collect(),
            log_scale: scale,
            t: 0.0,
        };
        let obs = observables(&st);
        prop_assert!((-1.0..=1.0).contains(&obs.s_z));
        prop_assert!(obs.n_b >= 0.0);
        prop_assert!(obs.log_norm.is_finite());
    }

    #[test]
    fn overlap_matches_fock_space_inner_product(
        are in -0.9f64..0.9, aim in -0.9f64..0.9,
        bre in -0.9f64..0.9, bim in -0.9f64..0.9,
    ) {
        // ⟨0|D†(α)D(β)|0⟩ = Σ_n conj(c_n(α)) c_n(β) with coherent
        // amplitudes c_n = e^{-|z|²/2} zⁿ/√n!; truncation error is far
        // below the tolerance for |z| < 1.
        let alpha = c(are, aim);
        let beta = c(bre, bim);
        let coherent = |z: Complex64| -> Vec<Complex64> {
            let mut out = Vec::with_capacity(41);
            let mut cur = Complex64::new((-0.5 * z.norm_sqr()).exp(), 0.0);
            out.push(cur);
            for n in 1..=40 {
                cur *= z / (n as f64).sqrt();
                out.push(cur);
            }
            out
        };
        let direct: Complex64 = coherent(alpha)
            .iter()
            .zip(&coherent(beta))
            .map(|(a, b)| a.conj() * b)
            .sum();
        let eta = overlap_eta(&[alpha], &[beta]);
        prop_assert!((eta - direct).norm() < 1e-10, "{} vs {}", eta, direct);
    }
}

#[test]
fn continuation_is_stable_under_sweep_reversal() {
    // Forward continuation over the unbroken segment, then an independent
    // backward continuation from the last state; energies must agree to
    // 10x the solver tolerance at every grid point.
    let p = ModelParams::new(0.3, 0.1, BiasKind::Imaginary, 0.0).unwrap();
    let sweeper = Sweeper::new(
        p,
        BathSpec::Wilson {
            lambda_disc: 1.2,
            m: 80,
        },
        SweepAxis::Lambda,
    );
    let grid = linear_grid(0.0, 0.5, 26);
    let forward = sweeper.run(&grid).unwrap();
    assert!(forward.points.iter().all(|pt| pt.converged));

    let mut carry = forward.states.last().cloned().flatten();
    for (i, &x) in grid.iter().enumerate().rev() {
        let roots = sweeper
            .solve_ensemble(x, carry.as_ref(), Branch::Lower)
            .unwrap();
        let sol = roots.into_iter().next().expect("backward solve");
        let fwd = forward.points[i].energy;
        assert!(
            (sol.state.energy - fwd).norm() <= 10.0 * 1e-10,
            "x={x}: forward {fwd} vs backward {}",
            sol.state.energy
        );
        carry = Some(sol.state);
    }
}

#[test]
fn pt_partner_of_converged_solutions_is_converged() {
    // Both phases of the continuum model: substitute the PT image into the
    // residual evaluator without re-solving.
    for lambda in [0.3, 0.7] {
        let p = ModelParams::new(0.3, 0.1, BiasKind::Imaginary, lambda).unwrap();
        let sweeper = Sweeper::new(
            p,
            BathSpec::Wilson {
                lambda_disc: 1.2,
                m: 80,
            },
            SweepAxis::Lambda,
        );
        let seed = qubit_seed(&p, 80, Branch::Lower);
        let roots = sweeper.solve_ensemble(lambda, Some(&seed), Branch::Lower).unwrap();
        let sol = &roots[0];
        let partner = sol.state.pt_partner();
        let bath = ptsb::discretize_wilson(&p, 1.2, 80).unwrap();
        let res = evaluate_residuals(&p, &bath, &partner).unwrap();
        assert!(
            res.max_norm() <= 1e-10,
            "lambda={lambda}: partner residual {}",
            res.max_norm()
        );
        assert!((partner.energy - sol.state.energy.conj()).norm() < 1e-14);
    }
}

#[test]
fn trajectory_is_insensitive_to_the_regularization_floor() {
    let p = ModelParams::new(0.1, 0.05, BiasKind::Imaginary, 0.01).unwrap();
    let bath = ptsb::discretize_uniform(&p, 64, 4.0).unwrap();
    let run = |floor: f64| -> TrajectoryRecord {
        let init = DynState::polarized_up(64, floor);
        let opts = IntegrateOptions {
            ctrl: StepControl {
                rtol: 1e-10,
                atol: 1e-12,
                ..Default::default()
            },
            sample_dt: 0.5,
            reg_floor: floor,
            ..Default::default()
        };
        integrate(&p, &bath, &init, 100.0, &opts).unwrap()
    };
    let reference = run(1e-8);
    for floor in [1e-6, 1e-10] {
        let other = run(floor);
        let gap = reference
            .rows
            .iter()
            .zip(&other.rows)
            .map(|(a, b)| (a.s_z - b.s_z).abs())
            .fold(0.0f64, f64::max);
        assert!(gap <= 1e-4, "floor {floor}: max |Δs_z| = {gap:.3e}");
    }
}

#[test]
fn step_halving_converges_the_endpoint() {
    let p = ModelParams::new(0.3, 0.1, BiasKind::Imaginary, 0.1).unwrap();
    let bath = ptsb::discretize_uniform(&p, 128, 4.0).unwrap();
    let run = |rtol: f64| -> f64 {
        let init = DynState::polarized_up(128, 1e-8);
        let opts = IntegrateOptions {
            ctrl: StepControl {
                rtol,
                atol: rtol * 1e-2,
                ..Default::default()
            },
            sample_dt: 1.0,
            ..Default::default()
        };
        integrate(&p, &bath, &init, 100.0, &opts)
            .unwrap()
            .rows
            .last()
            .unwrap()
            .s_z
    };
    let coarse = run(1e-8);
    let fine = run(5e-9);
    assert!(
        (coarse - fine).abs() < 1e-7,
        "endpoint moved by {:.3e}",
        (coarse - fine).abs()
    );
}

#[test]
fn no_recurrence_artifact_before_the_poincare_time() {
    // Doubling the mode count must not change ⟨n_b⟩ before T_p/2 of the
    // coarser bath (T_p = 2π/dω ≈ 3141 at M = 2000, ω_max = 4).
    let p = ModelParams::new(0.1, 0.05, BiasKind::Imaginary, 0.01).unwrap();
    let run = |m: usize| -> TrajectoryRecord {
        let bath = ptsb::discretize_uniform(&p, m, 4.0).unwrap();
        let tp = bath.recurrence_time().unwrap();
        assert!(1570.0 < tp, "horizon must stay below T_p (= {tp})");
        let init = DynState::polarized_up(m, 1e-8);
        let opts = IntegrateOptions {
            sample_dt: 1.0,
            ..Default::default()
        };
        integrate(&p, &bath, &init, 1570.0, &opts).unwrap()
    };
    let coarse = run(2000);
    let fine = run(4000);
    let gap = coarse
        .rows
        .iter()
        .zip(&fine.rows)
        .map(|(a, b)| (a.n_b - b.n_b).abs())
        .fold(0.0f64, f64::max);
    assert!(gap <= 1e-3, "max |Δn_b| = {gap:.3e} before T_p/2");
}
