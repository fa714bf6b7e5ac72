//! Nonlocal equilibria: counts, fixed-point residuals and an independent
//! shooting route.

use std::f64::consts::PI;

use chafee::dynamics::{galerkin_rhs, project_profile, GalerkinState};
use chafee::equilibria::{
    bifurcation_diagram, enumerate_equilibria, g_of_d, shoot, solve_nonlocal_fixed_points, NormSelector,
};
use chafee::model::{DiffusionCoefficient, Nonlinearity, ProblemSpec, Side};
use proptest::prelude::*;

fn spec(lambda: f64, diffusion: DiffusionCoefficient) -> ProblemSpec {
    ProblemSpec::new(lambda, Nonlinearity::cubic(), diffusion).unwrap()
}

fn constant() -> DiffusionCoefficient {
    DiffusionCoefficient::constant(1.0).unwrap()
}

fn affine() -> DiffusionCoefficient {
    DiffusionCoefficient::affine(1.0, 1.0).unwrap()
}

/// Non-monotone coefficient that rises above lambda / pi^2, dips below it and
/// returns to a(0).
fn dipping_table() -> DiffusionCoefficient {
    DiffusionCoefficient::table(&[(0.0, 1.0), (1.0, 2.2), (3.5, 0.6), (6.0, 1.0), (10.0, 1.0)]).unwrap()
}

#[test]
fn cascade_counts_for_constant_diffusion() {
    for (lambda, expected) in [(5.0, 1), (20.0, 3), (50.0, 5), (95.0, 7)] {
        let set = enumerate_equilibria(&spec(lambda, constant())).unwrap();
        assert_eq!(set.len(), expected, "lambda = {lambda}: {:?}", set.ids());
        assert!(set.warnings.is_empty());
    }
}

#[test]
fn affine_diffusion_has_one_fixed_point_per_profile() {
    let s = spec(50.0, affine());
    let set = enumerate_equilibria(&s).unwrap();
    assert_eq!(set.ids(), ["0", "u1+", "u1-", "u2+", "u2-"]);
    for e in set.entries.iter().filter(|e| e.k > 0) {
        let g = g_of_d(e.k, e.sign, e.d, &s, NormSelector::H1Squared).unwrap();
        assert!((g - e.d).abs() < 1e-9, "{}: g(d*) - d* = {}", e.id(), g - e.d);
        assert!((e.lambda_tilde - 50.0 / (1.0 + e.d)).abs() < 1e-12);
    }
}

/// `||u||^2_{H_0^1}` of the one-arch solution at `lambda_tilde`, by shooting
/// with bisection on `u'(0)` and a trapezoid rule on `u'^2` recovered from the
/// conserved level.
fn shooting_norm(lambda_tilde: f64) -> f64 {
    let nl = Nonlinearity::cubic();
    let steps = 20_000;
    // the arch lengthens with u'(0); it overshoots x = 1 while u(1) > 0
    let (mut lo, mut hi) = (1e-6, 0.999 * (0.5 * lambda_tilde).sqrt());
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        match shoot(&nl, lambda_tilde, mid, steps) {
            Ok(p) if p.zero_count == 0 && p.u_end > 0.0 => hi = mid,
            _ => lo = mid,
        }
    }
    let v0 = 0.5 * (lo + hi);
    let shot = shoot(&nl, lambda_tilde, v0, steps).unwrap();
    let h = 1.0 / steps as f64;
    let du2 = |u: f64| (v0 * v0 - 2.0 * lambda_tilde * nl.antiderivative(u)).max(0.0);
    let inner: f64 = shot.samples[1..steps].iter().map(|s| du2(s[1])).sum();
    h * (inner + 0.5 * (du2(shot.samples[0][1]) + du2(shot.samples[steps][1])))
}

#[test]
fn first_fixed_point_matches_shooting_oracle() {
    // d = G(50 / (1 + d)) by bisection on d with the shooting norm
    let (mut lo, mut hi) = (0.0, 50.0 / (PI * PI) - 1.0);
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        if shooting_norm(50.0 / (1.0 + mid)) > mid {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let oracle = 0.5 * (lo + hi);
    let scan = solve_nonlocal_fixed_points(1, Side::Plus, &spec(50.0, affine())).unwrap();
    assert_eq!(scan.roots.len(), 1);
    assert!((scan.roots[0].d - oracle).abs() < 1e-6, "{} vs {oracle}", scan.roots[0].d);
}

#[test]
fn projected_equilibria_are_stationary_for_the_galerkin_flow() {
    let s = spec(50.0, affine());
    let set = enumerate_equilibria(&s).unwrap();
    for e in &set.entries {
        let state = GalerkinState::new(project_profile(e, 64));
        let rhs = galerkin_rhs(&state, &s);
        let norm = rhs.iter().map(|c| c * c).sum::<f64>().sqrt();
        assert!(norm < 1e-6, "{}: rhs norm {norm}", e.id());
    }
}

#[test]
fn first_profile_norm_increases_with_lambda_tilde() {
    let s = spec(1.0, constant());
    let mut last = 0.0;
    for i in 1..=50 {
        let lambda_tilde = PI * PI + (400.0 - PI * PI) * i as f64 / 50.0;
        let g = g_of_d(1, Side::Plus, 0.0, &s.with_lambda(lambda_tilde).unwrap(), NormSelector::H1Squared).unwrap();
        assert!(g > last, "lambda_tilde = {lambda_tilde}: {g} <= {last}");
        last = g;
    }
}

#[test]
fn dipping_coefficient_gives_three_fixed_points() {
    let s = spec(20.0, dipping_table());
    let scan = solve_nonlocal_fixed_points(1, Side::Plus, &s).unwrap();
    assert!(scan.roots.len() >= 3, "{:?}", scan.roots);
    for r in &scan.roots {
        assert!(r.residual.abs() < 1e-9);
    }
    let set = enumerate_equilibria(&s).unwrap();
    assert_eq!(set.len(), 7);
}

#[test]
fn bifurcation_sweep_changes_count_at_thresholds() {
    let diagram = bifurcation_diagram(&spec(5.0, constant()), 5.0, 100.0, 96).unwrap();
    assert_eq!(diagram.lambda_grid.len(), 96);
    let mut changes = Vec::new();
    let mut last = diagram.branch_count(5.0);
    for &lambda in &diagram.lambda_grid {
        let count = diagram.branch_count(lambda);
        if count != last {
            changes.push(lambda);
            last = count;
        }
    }
    let thresholds: Vec<f64> = (1..=3).map(|k| PI * PI * (k * k) as f64).collect();
    assert_eq!(changes.len(), 3);
    for (lambda, t) in changes.iter().zip(&thresholds) {
        assert!(*lambda > *t && lambda - 1.0 < *t, "change at {lambda}, threshold {t}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn constant_diffusion_count_is_two_n_plus_one(lambda in 1.0f64..100.0) {
        let n = (1..10usize).filter(|&k| PI * PI * ((k * k) as f64) < lambda).count();
        let near_threshold = (1..=4usize).any(|k| (lambda - PI * PI * (k * k) as f64).abs() < 0.05);
        prop_assume!(!near_threshold);
        let set = enumerate_equilibria(&spec(lambda, constant())).unwrap();
        prop_assert_eq!(set.len(), 2 * n + 1);
    }

    #[test]
    fn affine_fixed_point_is_unique(lambda in 12.0f64..90.0, slope in 0.1f64..3.0) {
        let s = spec(lambda, DiffusionCoefficient::affine(1.0, slope).unwrap());
        let scan = solve_nonlocal_fixed_points(1, Side::Plus, &s).unwrap();
        prop_assert_eq!(scan.roots.len(), 1);
        prop_assert!(scan.warnings.is_empty());
    }
}
