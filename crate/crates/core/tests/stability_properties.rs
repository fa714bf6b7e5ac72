//! Linearized stability and the connection graph.

use std::f64::consts::PI;

use chafee::equilibria::enumerate_equilibria;
use chafee::model::{DiffusionCoefficient, Nonlinearity, ProblemSpec};
use chafee::stability::{
    check_morse_order, linearization_matrix, linearization_report, probe_connections, spectrum, Classification,
    ProbeOptions, Provenance, Violation,
};
use chafee::timemap::EquilibriumProfile;
use nalgebra::DMatrix;
use proptest::prelude::*;

fn spec(lambda: f64, diffusion: DiffusionCoefficient) -> ProblemSpec {
    ProblemSpec::new(lambda, Nonlinearity::cubic(), diffusion).unwrap()
}

fn affine() -> DiffusionCoefficient {
    DiffusionCoefficient::affine(1.0, 1.0).unwrap()
}

#[test]
fn unstable_count_at_zero_matches_linear_thresholds() {
    for lambda in [5.0, 20.0, 50.0, 95.0] {
        for diffusion in [DiffusionCoefficient::constant(1.0).unwrap(), affine()] {
            let s = spec(lambda, diffusion);
            let report = linearization_report(&EquilibriumProfile::zero(lambda, 65), &s, 32).unwrap();
            let expected = (1..=32usize).filter(|&j| lambda > PI * PI * (j * j) as f64).count();
            assert_eq!(report.unstable_count, expected, "lambda = {lambda}");
        }
    }
}

#[test]
fn first_profiles_are_stable_below_the_second_threshold() {
    for lambda in [12.0, 20.0, 39.0] {
        let s = spec(lambda, affine());
        let set = enumerate_equilibria(&s).unwrap();
        for id in ["u1+", "u1-"] {
            let report = linearization_report(set.get(id).unwrap(), &s, 64).unwrap();
            assert_eq!(report.classification, Classification::Stable, "lambda = {lambda}, {id}");
            assert!(report.eigenvalues[0] < -1e-6);
        }
        let zero = linearization_report(set.get("0").unwrap(), &s, 64).unwrap();
        assert_eq!(zero.classification, Classification::Unstable);
    }
}

#[test]
fn second_profiles_are_unstable_below_the_third_threshold() {
    for lambda in [45.0, 60.0, 85.0] {
        let s = spec(lambda, affine());
        let set = enumerate_equilibria(&s).unwrap();
        for id in ["u2+", "u2-"] {
            let report = linearization_report(set.get(id).unwrap(), &s, 64).unwrap();
            assert_eq!(report.classification, Classification::Unstable, "lambda = {lambda}, {id}");
        }
    }
}

#[test]
fn classical_morse_indices_are_k_minus_one() {
    let s = spec(95.0, DiffusionCoefficient::constant(1.0).unwrap());
    let set = enumerate_equilibria(&s).unwrap();
    for e in set.entries.iter().filter(|e| e.k > 0) {
        let report = linearization_report(e, &s, 64).unwrap();
        assert_eq!(report.unstable_count, e.k - 1, "{}", e.id());
    }
}

#[test]
fn constant_diffusion_linearization_is_symmetric() {
    let s = spec(50.0, DiffusionCoefficient::constant(1.0).unwrap());
    let set = enumerate_equilibria(&s).unwrap();
    let m = linearization_matrix(set.get("u2+").unwrap(), &s, 24);
    assert!((&m - m.transpose()).amax() < 1e-12);
}

#[test]
fn connection_graph_at_lambda_fifty() {
    let s = spec(50.0, affine());
    let set = enumerate_equilibria(&s).unwrap();
    let graph = probe_connections(&set, &s, &ProbeOptions::default()).unwrap();
    assert!(graph.missing_required_edges().is_empty(), "{:?}", graph.missing_required_edges());
    assert!(check_morse_order(&graph).is_empty());
    assert!(graph.probes.iter().all(|p| p.energy_monotone));
    let zero = graph.node("0").unwrap();
    for e in &graph.edges {
        assert!(graph.node(&e.src).unwrap().energy > graph.node(&e.dst).unwrap().energy);
        assert_ne!(e.dst, "0");
        if e.src != "0" {
            assert_eq!(e.provenance, Provenance::Observed);
        }
    }
    assert!(graph.nodes.iter().filter(|n| n.k > 0).all(|n| n.energy < zero.energy));
    let mut injected = graph.clone();
    injected.inject_edge("u1+", "0").unwrap();
    assert!(check_morse_order(&injected).iter().any(|v| matches!(v, Violation::EdgeIntoZero { .. })));
}

#[test]
fn subcritical_graph_is_a_single_node() {
    let s = spec(5.0, affine());
    let set = enumerate_equilibria(&s).unwrap();
    let graph = probe_connections(&set, &s, &ProbeOptions::default()).unwrap();
    assert_eq!(graph.nodes.len(), 1);
    assert!(graph.edges.is_empty());
    assert!(check_morse_order(&graph).is_empty());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn spectrum_of_symmetric_matrix_matches_trace_and_count(
        entries in proptest::collection::vec(-5.0f64..5.0, 9),
    ) {
        let a = DMatrix::from_row_slice(3, 3, &entries);
        let sym = &a + a.transpose();
        let s = spectrum(&sym).unwrap();
        prop_assert!(!s.complex_flag);
        let sum: f64 = s.real_parts.iter().sum();
        prop_assert!((sum - sym.trace()).abs() < 1e-10);
        prop_assert!(s.real_parts.windows(2).all(|w| w[0] >= w[1]));
        prop_assert_ne!(s.sturm_agrees, Some(false));
    }
}
