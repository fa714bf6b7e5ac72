//! Time maps and energy levels against independent quadrature and
//! root-finding routes.

use std::f64::consts::{FRAC_PI_2, PI};

use chafee::model::{Nonlinearity, Side};
use chafee::timemap::{profile_h1_norm_sq, solve_energy_level, time_map, unit_time_map};
use proptest::prelude::*;

fn cubic_antiderivative(u: f64) -> f64 {
    0.5 * u * u - 0.25 * u.powi(4)
}

/// Amplitude `U` with `F(U) = E` on `[0, 1]`, by plain bisection.
fn amplitude_oracle(energy: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if cubic_antiderivative(mid) < energy {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `int_0^U (E - F(u))^{-1/2} du` with `u = U sin(phi)` and a 10^6-point
/// trapezoid rule. For the cubic `E - F(U sin phi) = U^2 cos^2(phi)
/// (1/2 - U^2 (1 + sin^2 phi) / 4)`, which leaves the smooth integrand
/// `(1/2 - U^2 (1 + sin^2 phi) / 4)^{-1/2}`.
fn unit_time_map_oracle(energy: f64) -> f64 {
    let amp = amplitude_oracle(energy);
    let n = 1_000_000;
    let h = FRAC_PI_2 / n as f64;
    let integrand = |phi: f64| {
        let s = phi.sin();
        1.0 / (0.5 - 0.25 * amp * amp * (1.0 + s * s)).sqrt()
    };
    let mut sum = 0.5 * (integrand(0.0) + integrand(FRAC_PI_2));
    for i in 1..n {
        sum += integrand(i as f64 * h);
    }
    sum * h
}

#[test]
fn time_map_matches_trapezoid_oracle() {
    let nl = Nonlinearity::cubic();
    for energy in [1e-6, 1e-3, 0.05, 0.15, 0.22, 0.245] {
        let expected = unit_time_map_oracle(energy);
        let got = unit_time_map(&nl, energy, Side::Plus).unwrap();
        assert!((got - expected).abs() < 1e-8 * expected, "E = {energy}: {got} vs {expected}");
    }
}

#[test]
fn first_energy_level_at_two_pi_squared_matches_bisection_oracle() {
    let nl = Nonlinearity::cubic();
    let lambda_tilde = 2.0 * PI * PI;
    let target = (lambda_tilde / 2.0).sqrt();
    let (mut lo, mut hi) = (1e-10, 0.25 * (1.0 - 1e-9));
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        if unit_time_map_oracle(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let oracle = 0.5 * (lo + hi);
    let level = solve_energy_level(&nl, 1, lambda_tilde, Side::Plus).unwrap();
    assert!((level.energy - oracle).abs() < 1e-9, "{} vs {oracle}", level.energy);
}

#[test]
fn small_energy_limit_is_linear_period() {
    let nl = Nonlinearity::cubic();
    for lambda_tilde in [15.0f64, 40.0, 90.0] {
        let tau = time_map(&nl, lambda_tilde, 1e-8, Side::Plus).unwrap();
        let ratio = tau * (2.0 * lambda_tilde).sqrt() / PI;
        assert!((ratio - 1.0).abs() < 1e-3, "lambda_tilde = {lambda_tilde}: ratio {ratio}");
    }
}

#[test]
fn profile_norm_rescales_with_arch_count() {
    // u_k(x) = u_1(k x) on the first arch, with lambda_tilde scaled by k^2
    let nl = Nonlinearity::cubic();
    for k in 2..=4usize {
        let kk = (k * k) as f64;
        for lambda_tilde in [50.0 * kk, 120.0 * kk] {
            let direct = profile_h1_norm_sq(&nl, k, lambda_tilde, Side::Plus).unwrap();
            let scaled = kk * profile_h1_norm_sq(&nl, 1, lambda_tilde / kk, Side::Plus).unwrap();
            assert!((direct - scaled).abs() < 1e-9 * scaled, "k = {k}: {direct} vs {scaled}");
            let e_k = solve_energy_level(&nl, k, lambda_tilde, Side::Plus).unwrap().energy;
            let e_1 = solve_energy_level(&nl, 1, lambda_tilde / kk, Side::Plus).unwrap().energy;
            assert!((e_k - e_1).abs() < 1e-12);
        }
    }
}

#[test]
fn levels_past_the_bracket_are_flagged() {
    // the root for lambda_tilde = 400 lies within 1e-9 sup F of the separatrix
    let nl = Nonlinearity::cubic();
    let level = solve_energy_level(&nl, 1, 400.0, Side::Plus).unwrap();
    assert!(level.saturated);
    assert!((level.energy - 0.25 * (1.0 - 1e-9)).abs() < 1e-17);
    assert!(!solve_energy_level(&nl, 1, 300.0, Side::Plus).unwrap().saturated);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn time_map_increases_with_energy(e in 1e-6f64..0.24, frac in 0.01f64..0.99) {
        let nl = Nonlinearity::cubic();
        let higher = e + frac * (0.2499 - e);
        let t0 = unit_time_map(&nl, e, Side::Plus).unwrap();
        let t1 = unit_time_map(&nl, higher, Side::Plus).unwrap();
        prop_assert!(t1 > t0);
    }

    #[test]
    fn time_map_scales_like_inverse_root(e in 1e-6f64..0.24, lambda_tilde in 1.0f64..500.0) {
        let nl = Nonlinearity::cubic();
        let unit = unit_time_map(&nl, e, Side::Plus).unwrap();
        let tau = time_map(&nl, lambda_tilde, e, Side::Plus).unwrap();
        prop_assert!((tau * lambda_tilde.sqrt() - unit).abs() <= 1e-14 * unit);
    }

    #[test]
    fn odd_nonlinearity_has_symmetric_time_map(e in 1e-6f64..0.24) {
        let nl = Nonlinearity::cubic();
        let plus = unit_time_map(&nl, e, Side::Plus).unwrap();
        let minus = unit_time_map(&nl, e, Side::Minus).unwrap();
        prop_assert!((plus - minus).abs() <= 1e-13 * plus);
    }

    #[test]
    fn energy_level_solves_the_length_condition(lambda_tilde in 10.0f64..250.0) {
        let nl = Nonlinearity::cubic();
        let level = solve_energy_level(&nl, 1, lambda_tilde, Side::Plus).unwrap();
        prop_assert!(!level.saturated);
        let tau = time_map(&nl, lambda_tilde, level.energy, Side::Plus).unwrap();
        prop_assert!((tau - 0.5f64.sqrt()).abs() < 1e-9);
    }
}
