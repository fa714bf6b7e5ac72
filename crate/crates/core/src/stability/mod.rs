//! Linearization at equilibria, spectra, unstable-manifold probes and the
//! connection graph with its Morse-order check.

mod graph;
mod sturm;

pub use graph::{
    check_morse_order, probe_connections, ConnectionGraph, Edge, Node, ProbeData, ProbeOptions, ProbeResult,
    Provenance, Violation,
};
pub use sturm::{characteristic_polynomial, sturm_count_above};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use crate::dynamics::{h1_norm_sq, mode_stiffness, project_profile, SineBasis, SineScratch};
use crate::model::ProblemSpec;
use crate::timemap::EquilibriumProfile;
use crate::{Error, Result};

/// Eigenvalues with `|mu| <= MARGINAL_TOL` make an equilibrium marginal;
/// those above it count as unstable.
pub const MARGINAL_TOL: f64 = 1e-9;
/// Sweep cap for the Schur and symmetric eigen iterations.
pub const MAX_EIGEN_ITERATIONS: usize = 10_000;
const SYMMETRY_TOL: f64 = 1e-12;
const COMPLEX_TOL: f64 = 1e-10;

/// `L_ij = -a(d*) j^2 pi^2 delta_ij + lambda <f'(u*) w_j, w_i>
///         + 2 a'(d*) <u*', w_j'> <u*'', w_i>`
/// in the orthonormal sine basis, with `u*` the projection of the profile on
/// the first `n` modes and the inner products by collocation on `4n` nodes.
pub fn linearization_matrix(eq: &EquilibriumProfile, spec: &ProblemSpec, n: usize) -> DMatrix<f64> {
    let coeffs = if eq.is_zero() { vec![0.0; n] } else { project_profile(eq, n) };
    linearization_from_coeffs(&coeffs, eq.d, spec)
}

pub(crate) fn linearization_from_coeffs(coeffs: &[f64], d: f64, spec: &ProblemSpec) -> DMatrix<f64> {
    let n = coeffs.len();
    let basis = SineBasis::shared(n);
    let m = basis.grid_intervals();
    let mut scratch = SineScratch::default();
    let mut u = vec![0.0; m - 1];
    basis.synthesize(coeffs, &mut u, &mut scratch);
    let nl = spec.nonlinearity();
    let fp: Vec<f64> = u.iter().map(|&v| nl.f_prime(v)).collect();
    let a = spec.diffusion().a(d);
    let a_prime = spec.diffusion().a_prime(d);
    let lambda = spec.lambda();

    let mut mat = DMatrix::zeros(n, n);
    let mut unit = vec![0.0; n];
    let mut wj = vec![0.0; m - 1];
    let mut column = vec![0.0; n];
    for j in 0..n {
        unit.iter_mut().for_each(|v| *v = 0.0);
        unit[j] = 1.0;
        basis.synthesize(&unit, &mut wj, &mut scratch);
        for (w, f) in wj.iter_mut().zip(&fp) {
            *w *= f;
        }
        basis.project(&wj, &mut column, &mut scratch);
        for i in 0..n {
            mat[(i, j)] = lambda * column[i];
        }
        mat[(j, j)] -= a * mode_stiffness(j + 1);
    }
    // <u*', w_j'> = j^2 pi^2 c_j and <u*'', w_i> = -i^2 pi^2 c_i
    if a_prime != 0.0 {
        let v: Vec<f64> = coeffs.iter().enumerate().map(|(j, c)| mode_stiffness(j + 1) * c).collect();
        for i in 0..n {
            for j in 0..n {
                mat[(i, j)] -= 2.0 * a_prime * v[j] * v[i];
            }
        }
    }
    mat
}

/// Eigenvalues of a dense real matrix.
#[derive(Debug, Clone, Serialize)]
pub struct Spectrum {
    /// Real parts, sorted descending.
    pub real_parts: Vec<f64>,
    /// Imaginary parts in the same order.
    pub imag_parts: Vec<f64>,
    /// Some eigenvalue has a non-negligible imaginary part.
    pub complex_flag: bool,
    pub symmetric: bool,
    /// For `n <= 4`: whether Sturm counting on the characteristic polynomial
    /// agrees with the number of distinct eigenvalues above `MARGINAL_TOL`.
    pub sturm_agrees: Option<bool>,
}

impl Spectrum {
    pub fn unstable_count(&self) -> usize {
        self.real_parts.iter().filter(|&&r| r > MARGINAL_TOL).count()
    }

    pub fn is_marginal(&self) -> bool {
        self.real_parts.iter().zip(&self.imag_parts).any(|(r, i)| r.hypot(*i) <= MARGINAL_TOL)
    }
}

fn is_symmetric(m: &DMatrix<f64>) -> bool {
    let scale = m.amax().max(1.0);
    (0..m.nrows()).all(|i| (0..i).all(|j| (m[(i, j)] - m[(j, i)]).abs() <= SYMMETRY_TOL * scale))
}

/// All eigenvalues: symmetric eigen-solver when the matrix is symmetric,
/// real Schur form otherwise.
pub fn spectrum(matrix: &DMatrix<f64>) -> Result<Spectrum> {
    if !matrix.is_square() {
        return Err(Error::InvalidInput("spectrum needs a square matrix".into()));
    }
    if matrix.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("matrix has non-finite entries".into()));
    }
    let n = matrix.nrows();
    let symmetric = is_symmetric(matrix);
    let mut pairs: Vec<(f64, f64)> = if symmetric {
        let sym = 0.5 * (matrix + matrix.transpose());
        let eig = SymmetricEigen::try_new(sym, f64::EPSILON, MAX_EIGEN_ITERATIONS)
            .ok_or(Error::ConvergenceFailure { iterations: MAX_EIGEN_ITERATIONS })?;
        eig.eigenvalues.iter().map(|&v| (v, 0.0)).collect()
    } else {
        let schur = nalgebra::linalg::Schur::try_new(matrix.clone(), f64::EPSILON, MAX_EIGEN_ITERATIONS)
            .ok_or(Error::ConvergenceFailure { iterations: MAX_EIGEN_ITERATIONS })?;
        schur.complex_eigenvalues().iter().map(|c| (c.re, c.im)).collect()
    };
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then(b.1.total_cmp(&a.1)));
    let scale = matrix.amax().max(1.0);
    let complex_flag = pairs.iter().any(|p| p.1.abs() > COMPLEX_TOL * scale);
    let sturm_agrees = (n <= 4 && !complex_flag).then(|| {
        let poly = characteristic_polynomial(matrix);
        let mut distinct: Vec<f64> = Vec::new();
        for &(r, _) in pairs.iter().filter(|p| p.0 > MARGINAL_TOL) {
            if distinct.last().is_none_or(|&last| (last - r).abs() > 1e-8 * scale) {
                distinct.push(r);
            }
        }
        sturm_count_above(&poly, MARGINAL_TOL) == distinct.len()
    });
    Ok(Spectrum {
        real_parts: pairs.iter().map(|p| p.0).collect(),
        imag_parts: pairs.iter().map(|p| p.1).collect(),
        complex_flag,
        symmetric,
        sturm_agrees,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Classification {
    Stable,
    Unstable,
    Marginal,
}

impl std::fmt::Display for Classification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Classification::Stable => "stable",
            Classification::Unstable => "unstable",
            Classification::Marginal => "marginal",
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LinearizationReport {
    pub id: String,
    pub matrix_dim: usize,
    /// Real parts, descending.
    pub eigenvalues: Vec<f64>,
    pub unstable_count: usize,
    pub classification: Classification,
    pub complex_flag: bool,
    pub sturm_agrees: Option<bool>,
}

pub fn linearization_report(eq: &EquilibriumProfile, spec: &ProblemSpec, n: usize) -> Result<LinearizationReport> {
    let spec_matrix = linearization_matrix(eq, spec, n);
    let s = spectrum(&spec_matrix)?;
    Ok(report_from_spectrum(eq.id(), n, &s))
}

pub(crate) fn report_from_spectrum(id: String, n: usize, s: &Spectrum) -> LinearizationReport {
    let unstable_count = s.unstable_count();
    let classification = if s.is_marginal() {
        Classification::Marginal
    } else if unstable_count > 0 {
        Classification::Unstable
    } else {
        Classification::Stable
    };
    LinearizationReport {
        id,
        matrix_dim: n,
        eigenvalues: s.real_parts.clone(),
        unstable_count,
        classification,
        complex_flag: s.complex_flag,
        sturm_agrees: s.sturm_agrees,
    }
}

/// Real unstable eigenpairs `(mu, v)` with `v` normalized in `H_0^1` and its
/// sign fixed so that its largest component is positive. A parity class of
/// modes carrying less than `1e-10` of the norm is snapped to zero, so
/// eigenvectors of reflection-symmetric equilibria keep their exact symmetry.
pub fn unstable_directions(matrix: &DMatrix<f64>) -> Result<Vec<(f64, Vec<f64>)>> {
    let s = spectrum(matrix)?;
    if s.complex_flag {
        return Err(Error::InvalidInput("complex spectrum: eigenvector probes unavailable".into()));
    }
    let n = matrix.nrows();
    let mut out = Vec::new();
    if s.symmetric {
        let sym = 0.5 * (matrix + matrix.transpose());
        let eig = SymmetricEigen::try_new(sym, f64::EPSILON, MAX_EIGEN_ITERATIONS)
            .ok_or(Error::ConvergenceFailure { iterations: MAX_EIGEN_ITERATIONS })?;
        let mut idx: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i] > MARGINAL_TOL).collect();
        idx.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        for i in idx {
            let v: Vec<f64> = eig.eigenvectors.column(i).iter().copied().collect();
            out.push((eig.eigenvalues[i], normalize_direction(v)));
        }
    } else {
        for &mu in s.real_parts.iter().filter(|&&r| r > MARGINAL_TOL) {
            out.push((mu, normalize_direction(inverse_iteration(matrix, mu)?)));
        }
    }
    Ok(out)
}

fn inverse_iteration(matrix: &DMatrix<f64>, mu: f64) -> Result<Vec<f64>> {
    let n = matrix.nrows();
    let shift = mu + 1e-10 * mu.abs().max(1.0);
    let shifted = matrix - DMatrix::identity(n, n) * shift;
    let lu = shifted.lu();
    let mut x = DVector::from_fn(n, |i, _| 1.0 / (i + 1) as f64);
    for _ in 0..8 {
        x = lu.solve(&x).ok_or(Error::ConvergenceFailure { iterations: 8 })?;
        let norm = x.norm();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::ConvergenceFailure { iterations: 8 });
        }
        x /= norm;
    }
    Ok(x.iter().copied().collect())
}

fn normalize_direction(mut v: Vec<f64>) -> Vec<f64> {
    let total: f64 = v.iter().map(|c| c * c).sum();
    for parity in 0..2 {
        let part: f64 = v.iter().skip(parity).step_by(2).map(|c| c * c).sum();
        if part < 1e-20 * total {
            v.iter_mut().skip(parity).step_by(2).for_each(|c| *c = 0.0);
        }
    }
    let norm = h1_norm_sq(&v).sqrt();
    let pivot = v.iter().copied().fold(0.0f64, |m, c| if c.abs() > m.abs() { c } else { m });
    let scale = if pivot < 0.0 { -1.0 / norm } else { 1.0 / norm };
    v.iter_mut().for_each(|c| *c *= scale);
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibria::enumerate_equilibria;
    use crate::model::{DiffusionCoefficient, Nonlinearity};
    use std::f64::consts::PI;

    fn spec(lambda: f64, diffusion: DiffusionCoefficient) -> ProblemSpec {
        ProblemSpec::new(lambda, Nonlinearity::cubic(), diffusion).unwrap()
    }

    #[test]
    fn diagonal_matrix_spectrum() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![-3.0, 2.0, 0.5]));
        let s = spectrum(&m).unwrap();
        assert_eq!(s.real_parts, vec![2.0, 0.5, -3.0]);
        assert_eq!(s.unstable_count(), 2);
        assert_eq!(s.sturm_agrees, Some(true));
    }

    #[test]
    fn swap_matrix_spectrum() {
        let m = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let s = spectrum(&m).unwrap();
        assert!((s.real_parts[0] - 1.0).abs() < 1e-15 && (s.real_parts[1] + 1.0).abs() < 1e-15);
    }

    #[test]
    fn rotation_is_flagged_complex() {
        let m = DMatrix::from_row_slice(2, 2, &[-1.0, 2.0, -2.0, -1.0]);
        let s = spectrum(&m).unwrap();
        assert!(s.complex_flag && !s.symmetric);
        assert_eq!(s.real_parts, vec![-1.0, -1.0]);
        assert_eq!(s.unstable_count(), 0);
    }

    #[test]
    fn nonsymmetric_real_spectrum_via_schur() {
        let m = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 0.0, 0.0, -1.0, 5.0, 0.0, 0.0, 3.0]);
        let s = spectrum(&m).unwrap();
        assert_eq!(s.real_parts.len(), 3);
        assert!((s.real_parts[0] - 3.0).abs() < 1e-12);
        assert_eq!(s.sturm_agrees, Some(true));
        let dirs = unstable_directions(&m).unwrap();
        assert_eq!(dirs.len(), 2);
        for (mu, v) in dirs {
            let v = DVector::from_vec(v);
            assert!((&m * &v - &v * mu).norm() < 1e-8 * v.norm());
        }
    }

    #[test]
    fn zero_equilibrium_linearization_is_diagonal() {
        let s = spec(50.0, DiffusionCoefficient::affine(1.0, 3.0).unwrap());
        let zero = EquilibriumProfile::zero(50.0, 65);
        let m = linearization_matrix(&zero, &s, 8);
        for i in 0..8 {
            for j in 0..8 {
                let expected = if i == j { 50.0 - mode_stiffness(j + 1) } else { 0.0 };
                assert!((m[(i, j)] - expected).abs() < 1e-12);
            }
        }
        let r = linearization_report(&zero, &s, 8).unwrap();
        assert_eq!(r.unstable_count, 2);
        assert_eq!(r.classification, Classification::Unstable);
    }

    #[test]
    fn first_profile_is_stable_second_unstable() {
        let s = spec(50.0, DiffusionCoefficient::affine(1.0, 1.0).unwrap());
        let set = enumerate_equilibria(&s).unwrap();
        let u1 = linearization_report(set.get("u1+").unwrap(), &s, 32).unwrap();
        assert_eq!(u1.classification, Classification::Stable);
        let u2 = linearization_report(set.get("u2-").unwrap(), &s, 32).unwrap();
        assert_eq!(u2.classification, Classification::Unstable);
        assert_eq!(u2.unstable_count, 1);
    }

    #[test]
    fn unstable_directions_at_zero_are_sines() {
        let s = spec(50.0, DiffusionCoefficient::constant(1.0).unwrap());
        let m = linearization_matrix(&EquilibriumProfile::zero(50.0, 65), &s, 16);
        let dirs = unstable_directions(&m).unwrap();
        assert_eq!(dirs.len(), 2);
        assert!((dirs[0].0 - (50.0 - PI * PI)).abs() < 1e-10);
        assert!((dirs[0].1[0] - 1.0 / PI).abs() < 1e-12);
        assert!(dirs[0].1.iter().skip(1).all(|&c| c == 0.0));
        assert!(dirs[1].1.iter().step_by(2).all(|&c| c == 0.0));
    }
}
