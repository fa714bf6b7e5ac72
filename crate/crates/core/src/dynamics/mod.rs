//! Spectral Galerkin dynamics of the nonlocal problem in the sine basis,
//! the Lyapunov functional, the lap number and omega-limit classification.

mod basis;
mod integrator;
mod lap;

pub use basis::{evaluate_on_uniform_grid, SineBasis, SineScratch, SineTransform};
pub use integrator::{
    energy_equality_residual, galerkin_rhs, integrate, lyapunov_energy, signed_energy_balance, IntegrationOptions,
    IntegrationStats, Trajectory, TRAJECTORY_CSV_HEADER,
};
pub use lap::{default_deadband, lap_number, lap_number_of_values, DEFAULT_LAP_GRID_POINTS};

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::equilibria::EquilibriumSet;
use crate::timemap::EquilibriumProfile;

pub const DEFAULT_MODES: usize = 64;
pub const DEFAULT_OMEGA_TOL: f64 = 1e-3;
/// Trajectories count as settled once `||du/dt||_{L^2}` drops below this.
pub const DEFAULT_SETTLE_THRESHOLD: f64 = 1e-7;

/// Coefficients `c_j` of `u = sum_j c_j sqrt(2) sin(j pi x)` at time `time`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GalerkinState {
    pub coeffs: Vec<f64>,
    pub time: f64,
}

impl GalerkinState {
    pub fn zero(modes: usize) -> Self {
        Self { coeffs: vec![0.0; modes], time: 0.0 }
    }

    pub fn new(coeffs: Vec<f64>) -> Self {
        Self { coeffs, time: 0.0 }
    }

    /// `u = epsilon sin(j pi x)`.
    pub fn single_mode(modes: usize, j: usize, epsilon: f64) -> Self {
        let mut s = Self::zero(modes);
        if (1..=modes).contains(&j) {
            s.coeffs[j - 1] = epsilon / std::f64::consts::SQRT_2;
        }
        s
    }

    pub fn modes(&self) -> usize {
        self.coeffs.len()
    }

    pub fn l2_norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum()
    }

    pub fn h1_norm_sq(&self) -> f64 {
        h1_norm_sq(&self.coeffs)
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite())
    }

    pub fn negated(&self) -> Self {
        Self { coeffs: self.coeffs.iter().map(|c| -c).collect(), time: self.time }
    }

    pub fn value_at(&self, x: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(j, c)| c * std::f64::consts::SQRT_2 * ((j + 1) as f64 * PI * x).sin())
            .sum()
    }

    /// `||self - other||_{H_0^1}` over the common modes; extra modes of either
    /// side count in full.
    pub fn h1_distance(&self, other: &[f64]) -> f64 {
        h1_distance(&self.coeffs, other)
    }
}

pub(crate) fn h1_norm_sq(coeffs: &[f64]) -> f64 {
    coeffs.iter().enumerate().map(|(j, c)| mode_stiffness(j + 1) * c * c).sum()
}

pub(crate) fn h1_distance(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().max(b.len());
    (0..n)
        .map(|j| {
            let d = a.get(j).copied().unwrap_or(0.0) - b.get(j).copied().unwrap_or(0.0);
            mode_stiffness(j + 1) * d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// Eigenvalue `j^2 pi^2` of `-d^2/dx^2` with Dirichlet conditions on (0, 1).
pub fn mode_stiffness(j: usize) -> f64 {
    let j = j as f64;
    j * j * PI * PI
}

/// `<u, w_j>` for `j = 1..=modes` from the uniform samples of a profile
/// (trapezoid rule; spectrally accurate for smooth profiles vanishing at both ends).
pub fn project_profile(profile: &EquilibriumProfile, modes: usize) -> Vec<f64> {
    project_samples(&profile.samples, modes)
}

pub fn project_samples(samples: &[[f64; 2]], modes: usize) -> Vec<f64> {
    let n = samples.len();
    if n < 2 {
        return vec![0.0; modes];
    }
    let h = 1.0 / (n - 1) as f64;
    (1..=modes)
        .map(|j| {
            let jp = j as f64 * PI;
            samples[1..n - 1].iter().map(|s| s[1] * (jp * s[0]).sin()).sum::<f64>() * h * std::f64::consts::SQRT_2
        })
        .collect()
}

/// Equilibrium in coefficient space, for distance queries.
#[derive(Debug, Clone)]
pub struct ProjectedEquilibrium {
    pub id: String,
    pub k: usize,
    pub coeffs: Vec<f64>,
}

pub fn project_equilibria(set: &EquilibriumSet, modes: usize) -> Vec<ProjectedEquilibrium> {
    set.entries
        .iter()
        .map(|e| ProjectedEquilibrium { id: e.id(), k: e.k, coeffs: project_profile(e, modes) })
        .collect()
}

/// Closest equilibrium in `H_0^1` and its distance.
pub fn nearest_equilibrium<'a>(coeffs: &[f64], eqs: &'a [ProjectedEquilibrium]) -> Option<(&'a ProjectedEquilibrium, f64)> {
    eqs.iter()
        .map(|e| (e, h1_distance(coeffs, &e.coeffs)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OmegaLimit {
    Equilibrium { id: String, distance: f64 },
    /// No equilibrium within tolerance when the integration stopped.
    Unresolved { nearest: Option<String>, distance: f64 },
}

impl OmegaLimit {
    pub fn id(&self) -> Option<&str> {
        match self {
            OmegaLimit::Equilibrium { id, .. } => Some(id),
            OmegaLimit::Unresolved { .. } => None,
        }
    }
}

impl std::fmt::Display for OmegaLimit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            OmegaLimit::Equilibrium { id, distance } => write!(f, "{id} (H1 distance {distance:.3e})"),
            OmegaLimit::Unresolved { nearest: Some(id), distance } => {
                write!(f, "unresolved (nearest {id} at H1 distance {distance:.3e})")
            }
            OmegaLimit::Unresolved { nearest: None, distance } => write!(f, "unresolved (distance {distance:.3e})"),
        }
    }
}

/// Nearest equilibrium to the final state if within `tol` in `H_0^1`.
pub fn classify_omega_limit(traj: &Trajectory, equilibria: &EquilibriumSet, tol: f64) -> OmegaLimit {
    let eqs = project_equilibria(equilibria, traj.final_state().modes());
    classify_state(&traj.final_state().coeffs, &eqs, tol)
}

pub fn classify_state(coeffs: &[f64], eqs: &[ProjectedEquilibrium], tol: f64) -> OmegaLimit {
    match nearest_equilibrium(coeffs, eqs) {
        Some((e, d)) if d <= tol => OmegaLimit::Equilibrium { id: e.id.clone(), distance: d },
        Some((e, d)) => OmegaLimit::Unresolved { nearest: Some(e.id.clone()), distance: d },
        None => OmegaLimit::Unresolved { nearest: None, distance: f64::INFINITY },
    }
}

/// Seeded smooth random initial data: `c_j = xi_j / j` for the first
/// `min(10, modes)` modes with `xi_j` uniform in `[-1, 1]` (ChaCha8), rescaled
/// so that `||u||_{L^2}` is uniform in `[0.05, max_l2]`.
pub fn random_state(modes: usize, seed: u64, max_l2: f64) -> GalerkinState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let active = modes.min(10);
    let mut coeffs = vec![0.0; modes];
    for (j, c) in coeffs.iter_mut().take(active).enumerate() {
        *c = rng.gen_range(-1.0..=1.0) / (j + 1) as f64;
    }
    let target = rng.gen_range(0.05..=max_l2.max(0.05));
    let norm = coeffs.iter().map(|c| c * c).sum::<f64>().sqrt();
    if norm > 0.0 {
        for c in &mut coeffs {
            *c *= target / norm;
        }
    }
    GalerkinState::new(coeffs)
}
