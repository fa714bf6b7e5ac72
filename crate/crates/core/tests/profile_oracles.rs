//! Equilibrium profiles of the frozen problem against shooting and direct
//! quadrature.

use chafee::dynamics::lap_number_of_values;
use chafee::equilibria::shoot;
use chafee::model::{Nonlinearity, Side};
use chafee::timemap::{profile_h1_norm_sq, reconstruct_profile};
use proptest::prelude::*;

#[test]
fn shooting_reproduces_time_map_profiles() {
    let nl = Nonlinearity::cubic();
    for k in 1..=3 {
        for sign in [Side::Plus, Side::Minus] {
            let profile = reconstruct_profile(&nl, k, 120.0, sign, 1025).unwrap();
            let shot = shoot(&nl, 120.0, profile.v0, 20_000).unwrap();
            assert!(shot.u_end.abs() < 1e-9, "k = {k}: u(1) = {}", shot.u_end);
            assert_eq!(shot.zero_count, k - 1);
            let worst = shot
                .samples
                .iter()
                .map(|s| (s[1] - profile.value_at(s[0])).abs())
                .fold(0.0, f64::max);
            assert!(worst < 1e-6, "k = {k}: sup discrepancy {worst}");
        }
    }
}

#[test]
fn norm_matches_simpson_quadrature_of_the_profile() {
    let nl = Nonlinearity::cubic();
    let n = 1 << 15;
    for (k, lambda_tilde) in [(1, 20.0), (1, 120.0), (2, 120.0), (3, 300.0)] {
        let profile = reconstruct_profile(&nl, k, lambda_tilde, Side::Plus, 65).unwrap();
        let shape = profile.shape.as_ref().unwrap();
        let h = 1.0 / n as f64;
        let mut sum = 0.0;
        for i in 0..=n {
            let du = shape.eval(i as f64 * h).1;
            let w = if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
            sum += w * du * du;
        }
        let simpson = sum * h / 3.0;
        let direct = profile_h1_norm_sq(&nl, k, lambda_tilde, Side::Plus).unwrap();
        assert!((simpson - direct).abs() < 1e-8 * direct, "k = {k}: {simpson} vs {direct}");
        assert!((profile.d - direct).abs() < 1e-12 * direct);
    }
}

#[test]
fn profiles_vanish_at_equally_spaced_zeros() {
    let nl = Nonlinearity::cubic();
    for k in 1..=4 {
        let profile = reconstruct_profile(&nl, k, 200.0, Side::Plus, 1025).unwrap();
        let zeros = profile.shape.as_ref().unwrap().zeros();
        assert_eq!(zeros.len(), k - 1);
        for (j, z) in zeros.iter().enumerate() {
            assert!((z - (j + 1) as f64 / k as f64).abs() < 1e-10);
        }
        let values: Vec<f64> = profile.samples.iter().map(|s| s[1]).collect();
        assert_eq!(lap_number_of_values(&values, None), k);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn profile_conserves_the_orbit_energy(lambda_tilde in 12.0f64..200.0, x in 0.0f64..1.0) {
        let nl = Nonlinearity::cubic();
        let profile = reconstruct_profile(&nl, 1, lambda_tilde, Side::Plus, 65).unwrap();
        let (u, du) = profile.shape.as_ref().unwrap().eval(x);
        let level = 0.5 * du * du + lambda_tilde * nl.antiderivative(u);
        prop_assert!((level - lambda_tilde * profile.energy).abs() < 1e-9 * lambda_tilde);
    }

    #[test]
    fn minus_profile_is_the_negated_plus_profile(lambda_tilde in 40.0f64..200.0, x in 0.0f64..1.0) {
        let nl = Nonlinearity::cubic();
        let plus = reconstruct_profile(&nl, 2, lambda_tilde, Side::Plus, 65).unwrap();
        let minus = reconstruct_profile(&nl, 2, lambda_tilde, Side::Minus, 65).unwrap();
        prop_assert!((plus.value_at(x) + minus.value_at(x)).abs() < 1e-12);
    }
}
