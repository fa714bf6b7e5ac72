//! Galerkin flow: stationarity, symmetry, Lyapunov structure and omega-limits.

use chafee::dynamics::{
    classify_omega_limit, energy_equality_residual, galerkin_rhs, integrate, lap_number, project_profile,
    random_state, signed_energy_balance, GalerkinState, IntegrationOptions, OmegaLimit, DEFAULT_OMEGA_TOL,
};
use chafee::equilibria::enumerate_equilibria;
use chafee::model::{DiffusionCoefficient, Nonlinearity, ProblemSpec};
use proptest::prelude::*;

fn affine_spec(lambda: f64) -> ProblemSpec {
    ProblemSpec::new(lambda, Nonlinearity::cubic(), DiffusionCoefficient::affine(1.0, 1.0).unwrap()).unwrap()
}

fn options(t_end: f64) -> IntegrationOptions {
    IntegrationOptions { t_end, ..IntegrationOptions::default() }
}

#[test]
fn equilibrium_stays_put() {
    let s = affine_spec(50.0);
    let set = enumerate_equilibria(&s).unwrap();
    let u1 = project_profile(set.get("u1+").unwrap(), 64);
    let traj = integrate(&GalerkinState::new(u1.clone()), &s, &options(10.0)).unwrap();
    let worst = traj.states.iter().map(|st| st.h1_distance(&u1)).fold(0.0, f64::max);
    assert!(worst < 1e-5, "drift {worst}");
    assert!(energy_equality_residual(&traj, 0, traj.len() - 1) < 1e-10);
}

#[test]
fn zero_stays_zero() {
    let traj = integrate(&GalerkinState::zero(64), &affine_spec(50.0), &options(1.0)).unwrap();
    assert!(traj.states.iter().all(|st| st.coeffs.iter().all(|&c| c == 0.0)));
    assert!(traj.energies.iter().all(|&e| e == 0.0));
}

#[test]
fn small_first_mode_settles_on_first_profile_of_matching_sign() {
    let s = affine_spec(50.0);
    let set = enumerate_equilibria(&s).unwrap();
    let opts = IntegrationOptions { settle_threshold: Some(1e-7), ..options(200.0) };
    for (eps, expected) in [(1e-3, "u1+"), (-1e-3, "u1-")] {
        let traj = integrate(&GalerkinState::single_mode(64, 1, eps), &s, &opts).unwrap();
        assert!(traj.stats.settled);
        let omega = classify_omega_limit(&traj, &set, DEFAULT_OMEGA_TOL);
        assert_eq!(omega.id(), Some(expected), "{omega}");
    }
}

#[test]
fn negated_data_give_negated_trajectory() {
    let s = affine_spec(50.0);
    let u0 = random_state(64, 11, 3.0);
    let a = integrate(&u0, &s, &options(2.0)).unwrap();
    let b = integrate(&u0.negated(), &s, &options(2.0)).unwrap();
    for (x, y) in a.states.iter().zip(&b.states) {
        for (p, q) in x.coeffs.iter().zip(&y.coeffs) {
            assert!((p + q).abs() <= 1e-12, "{p} vs {q}");
        }
    }
}

#[test]
fn doubling_the_modes_changes_little() {
    let s = affine_spec(50.0);
    for seed in [3, 4] {
        let coarse = random_state(32, seed, 1.0);
        let mut fine = coarse.coeffs.clone();
        fine.resize(64, 0.0);
        let a = integrate(&coarse, &s, &options(1.0)).unwrap();
        let b = integrate(&GalerkinState::new(fine), &s, &options(1.0)).unwrap();
        let gap = b.final_state().h1_distance(&a.final_state().coeffs);
        assert!(gap < 1e-6, "seed {seed}: {gap}");
    }
}

#[test]
fn large_data_are_absorbed_into_the_unit_ball() {
    // |u| <= 1 attracts for the cubic, so ||u||_{L^2} ends below 1
    let s = affine_spec(50.0);
    for seed in 0..4 {
        let u0 = random_state(64, 100 + seed, 10.0);
        let traj = integrate(&u0, &s, &options(4.0)).unwrap();
        assert_eq!(traj.stats.energy_violations, 0);
        let tail = &traj.l2_norms[traj.len() / 2..];
        assert!(tail.iter().all(|&n| n <= 1.0), "seed {seed}: {:?}", tail.last());
    }
}

#[test]
fn random_data_converge_to_a_first_profile() {
    let s = affine_spec(50.0);
    let set = enumerate_equilibria(&s).unwrap();
    let opts = IntegrationOptions { settle_threshold: Some(1e-7), ..options(200.0) };
    for seed in 0..3 {
        let traj = integrate(&random_state(64, seed, 2.0), &s, &opts).unwrap();
        match classify_omega_limit(&traj, &set, DEFAULT_OMEGA_TOL) {
            OmegaLimit::Equilibrium { id, .. } => assert!(id == "u1+" || id == "u1-", "seed {seed}: {id}"),
            other => panic!("seed {seed}: {other}"),
        }
        assert_eq!(traj.lap_increases(), 0);
    }
}

#[test]
fn energy_equality_defect_is_first_order_and_one_signed() {
    let s = affine_spec(50.0);
    let u0 = random_state(64, 2, 0.1);
    let run = |dt: f64| {
        let traj = integrate(&u0, &s, &IntegrationOptions { dt, t_end: 1.0, ..IntegrationOptions::default() }).unwrap();
        let n = traj.len() - 1;
        (energy_equality_residual(&traj, 0, n), signed_energy_balance(&traj, 0, n))
    };
    let (coarse, coarse_signed) = run(2e-4);
    let (fine, fine_signed) = run(1e-4);
    let ratio = coarse / fine;
    assert!((ratio - 2.0).abs() < 0.5, "ratio {ratio}");
    // the scheme dissipates more than the measured increments, never less
    assert!(coarse_signed >= -1e-8 && fine_signed >= -1e-8);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn single_sine_has_lap_number_j(j in 1usize..20, amp in 1e-3f64..5.0) {
        let state = GalerkinState::single_mode(32, j, amp);
        prop_assert_eq!(lap_number(&state, 513, None), j);
    }

    #[test]
    fn vector_field_is_odd(coeffs in proptest::collection::vec(-1.0f64..1.0, 16)) {
        let s = affine_spec(50.0);
        let state = GalerkinState::new(coeffs);
        let plus = galerkin_rhs(&state, &s);
        let minus = galerkin_rhs(&state.negated(), &s);
        for (p, m) in plus.iter().zip(&minus) {
            prop_assert!((p + m).abs() <= 1e-12 * p.abs().max(1.0));
        }
    }
}
