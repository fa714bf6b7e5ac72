//! Equilibria of the frozen-coefficient problem `-u'' = lambda_tilde f(u)`,
//! `u(0) = u(1) = 0`, through time maps of the conserved level
//! `u'^2/2 + lambda_tilde F(u) = lambda_tilde E`.
//!
//! Every singular integral `int_0^{U(E)} (E - F(u))^{-1/2} du` is evaluated
//! after the substitution `F(u) = E sin^2(theta)`, which turns it into
//! `int_0^{pi/2} 2 sqrt(E) sin(theta) / |f(u(theta))| d theta`, a smooth
//! integrand for every `E` below the separatrix level.

mod profile;

pub use profile::{reconstruct_profile, EquilibriumProfile, ProfileShape};
pub(crate) use profile::profile_at_level;

use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};

use crate::model::{Nonlinearity, Side};
use crate::quadrature::integrate_doubling;
use crate::roots::brent;
use crate::{Error, Result};

/// Successive Gauss-Legendre orders must agree to this relative tolerance.
pub const TIME_MAP_REL_TOL: f64 = 1e-10;
/// Largest relative change still accepted when the doubling hits its cap.
const TIME_MAP_ACCEPT_TOL: f64 = 1e-7;
/// Distance to the separatrix level below which the time map is singular.
pub const SEPARATRIX_GAP: f64 = 1e-12;
/// Slack allowed above `sup F` before an inversion is rejected.
pub const SEPARATRIX_SLACK: f64 = 1e-13;
/// Bisection bracket for the energy level, relative to `sup F`.
pub const ENERGY_BRACKET_LO: f64 = 1e-12;
pub const ENERGY_BRACKET_HI: f64 = 1.0 - 1e-9;
pub const ENERGY_TOL: f64 = 1e-13;

/// `sup F` on one side, cached by the nonlinearity.
pub fn sup_antiderivative(nl: &Nonlinearity, side: Side) -> f64 {
    nl.well(side).sup
}

/// Smallest `u >= 0` with `F(u) = E`.
pub fn positive_inverse(nl: &Nonlinearity, energy: f64) -> Result<f64> {
    inverse(nl, Side::Plus, energy)
}

/// Largest `u <= 0` with `F(u) = E`.
pub fn negative_inverse(nl: &Nonlinearity, energy: f64) -> Result<f64> {
    inverse(nl, Side::Minus, energy)
}

/// Signed inverse of `F` on `side` at level `energy`.
pub fn inverse(nl: &Nonlinearity, side: Side, energy: f64) -> Result<f64> {
    if !(energy >= 0.0) {
        return Err(Error::InvalidInput(format!("energy must be non-negative, got {energy}")));
    }
    let well = nl.well(side);
    if energy > well.sup + SEPARATRIX_SLACK {
        return Err(Error::AboveSeparatrix { energy, sup: well.sup });
    }
    if energy >= well.sup {
        return Ok(well.argsup);
    }
    Ok(side.sign() * invert_magnitude(nl, side, energy, well.argsup.abs()))
}

/// Magnitude `u` in `[0, limit]` with `F(side * u) = y`; `F` is increasing there.
/// Safeguarded Newton on a bisection bracket.
pub(crate) fn invert_magnitude(nl: &Nonlinearity, side: Side, y: f64, limit: f64) -> f64 {
    if y <= 0.0 {
        return 0.0;
    }
    let s = side.sign();
    let g = |u: f64| nl.antiderivative(s * u) - y;
    let mut lo = 0.0;
    let mut hi = if limit.is_finite() {
        limit
    } else {
        let mut h = (2.0 * y).sqrt().max(1.0);
        while g(h) < 0.0 {
            h *= 2.0;
        }
        h
    };
    let mut u = (2.0 * y).sqrt();
    if !(u > lo && u < hi) {
        u = 0.5 * (lo + hi);
    }
    for _ in 0..200 {
        let gu = g(u);
        if gu == 0.0 {
            return u;
        }
        if gu < 0.0 {
            lo = u;
        } else {
            hi = u;
        }
        let slope = s * nl.f(s * u);
        let mut next = u - gu / slope;
        if !(slope > 0.0 && next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - u).abs() <= 2.0 * f64::EPSILON * u || hi - lo <= 2.0 * f64::EPSILON * hi {
            return next;
        }
        u = next;
    }
    u
}

fn check_energy(nl: &Nonlinearity, energy: f64, side: Side) -> Result<f64> {
    let sup = sup_antiderivative(nl, side);
    if !(energy > 0.0) {
        return Err(Error::InvalidInput(format!("energy must be positive, got {energy}")));
    }
    if energy > sup + SEPARATRIX_SLACK {
        return Err(Error::AboveSeparatrix { energy, sup });
    }
    if sup - energy <= SEPARATRIX_GAP {
        return Err(Error::Singular { energy, sup });
    }
    Ok(nl.well(side).argsup.abs())
}

fn doubling(a: f64, b: f64, f: impl FnMut(f64) -> f64) -> Result<f64> {
    let res = integrate_doubling(a, b, TIME_MAP_REL_TOL, f);
    if res.converged || res.relative_change < TIME_MAP_ACCEPT_TOL {
        Ok(res.value)
    } else {
        Err(Error::QuadratureNotConverged { change: res.relative_change })
    }
}

/// `int_0^{U(E)} (E - F(u))^{-1/2} du` on `side` (the time map with
/// `lambda_tilde = 1`).
pub fn unit_time_map(nl: &Nonlinearity, energy: f64, side: Side) -> Result<f64> {
    let limit = check_energy(nl, energy, side)?;
    let s = side.sign();
    let root_e = energy.sqrt();
    doubling(0.0, FRAC_PI_2, |theta| {
        let sin = theta.sin();
        let u = invert_magnitude(nl, side, energy * sin * sin, limit);
        2.0 * root_e * sin / (s * nl.f(s * u))
    })
}

/// `tau(E) = lambda_tilde^{-1/2} int (E - F(u))^{-1/2} du` over the arc on `side`.
pub fn time_map(nl: &Nonlinearity, lambda_tilde: f64, energy: f64, side: Side) -> Result<f64> {
    if !(lambda_tilde > 0.0) {
        return Err(Error::InvalidInput(format!("lambda_tilde must be positive, got {lambda_tilde}")));
    }
    Ok(unit_time_map(nl, energy, side)? / lambda_tilde.sqrt())
}

/// `int_0^{U(E)} sqrt(E - F(u)) du` on `side`.
pub fn unit_arc_integral(nl: &Nonlinearity, energy: f64, side: Side) -> Result<f64> {
    let limit = check_energy(nl, energy, side)?;
    let s = side.sign();
    let e32 = energy * energy.sqrt();
    doubling(0.0, FRAC_PI_2, |theta| {
        let (sin, cos) = theta.sin_cos();
        let u = invert_magnitude(nl, side, energy * sin * sin, limit);
        2.0 * e32 * sin * cos * cos / (s * nl.f(s * u))
    })
}

/// Number of arches on each side for a `k`-profile whose first arch lies on
/// `first`: `(ceil(k/2), floor(k/2))`.
pub fn arch_counts(k: usize) -> (usize, usize) {
    (k.div_ceil(2), k / 2)
}

/// Orbit energy of the `k`-profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyLevel {
    pub energy: f64,
    pub k: usize,
    pub lambda_tilde: f64,
    /// Sign of the first arch.
    pub first: Side,
    /// The root lies within the top 1e-9 band below `sup F`, beyond what the
    /// bracket resolves; `energy` is the bracket end.
    pub saturated: bool,
}

/// Solves `n1 tau_first(E) + n2 tau_other(E) = 1/sqrt(2)` for the `k`-profile.
/// For odd `f` this is `k tau(E) = 1/sqrt(2)`. The map `E -> tau(E)` is
/// monotone, so a bracketed solve on the fixed bracket always converges.
pub fn solve_energy_level(nl: &Nonlinearity, k: usize, lambda_tilde: f64, first: Side) -> Result<EnergyLevel> {
    if k == 0 {
        return Err(Error::InvalidInput("profile index k must be at least 1".into()));
    }
    if !(lambda_tilde > 0.0 && lambda_tilde.is_finite()) {
        return Err(Error::InvalidInput(format!("lambda_tilde must be positive, got {lambda_tilde}")));
    }
    let kk = k as f64;
    if lambda_tilde <= kk * kk * PI * PI {
        return Err(Error::NoEquilibrium { k, lambda_tilde });
    }
    let (n1, n2) = arch_counts(k);
    let symmetric = nl.is_odd();
    let mut cap = sup_antiderivative(nl, first);
    if n2 > 0 {
        cap = cap.min(sup_antiderivative(nl, first.flip()));
    }
    if !cap.is_finite() {
        // Unbounded well: the time map never reaches the target.
        return Err(Error::NoEquilibrium { k, lambda_tilde });
    }
    let target = (lambda_tilde / 2.0).sqrt();
    let residual = |e: f64| -> Result<f64> {
        if symmetric {
            return Ok(kk * unit_time_map(nl, e, first)? - target);
        }
        let mut total = n1 as f64 * unit_time_map(nl, e, first)?;
        if n2 > 0 {
            total += n2 as f64 * unit_time_map(nl, e, first.flip())?;
        }
        Ok(total - target)
    };

    let lo = ENERGY_BRACKET_LO * cap;
    let hi = ENERGY_BRACKET_HI * cap;
    let f_lo = residual(lo)?;
    if f_lo >= 0.0 {
        return Err(Error::NoEquilibrium { k, lambda_tilde });
    }
    let (a, f_a, b, f_b) = if symmetric {
        // Walk up towards the separatrix; the costly levels next to it are
        // only reached when the root is really there.
        let (mut a, mut f_a) = (lo, f_lo);
        let mut j = 1;
        loop {
            let e = (cap * (1.0 - 0.5f64.powi(j))).clamp(a, hi);
            let r = residual(e)?;
            if r >= 0.0 {
                break (a, f_a, e, r);
            }
            if e >= hi {
                return Ok(EnergyLevel { energy: hi, k, lambda_tilde, first, saturated: true });
            }
            a = e;
            f_a = r;
            j += 1;
        }
    } else {
        let f_hi = residual(hi)?;
        if f_hi < 0.0 {
            return Ok(EnergyLevel { energy: hi, k, lambda_tilde, first, saturated: true });
        }
        // One sign change is expected; report anything else instead of guessing.
        let n = 48;
        let ratio = (hi / lo).powf(1.0 / n as f64);
        let mut changes = 0;
        let mut prev = f_lo;
        let mut e = lo;
        for _ in 0..n {
            e = (e * ratio).min(hi);
            let r = residual(e)?;
            if (r >= 0.0) != (prev >= 0.0) {
                changes += 1;
            }
            prev = r;
        }
        if changes > 1 {
            return Err(Error::MultipleEnergyRoots { k, lambda_tilde });
        }
        (lo, f_lo, hi, f_hi)
    };
    // tau' grows like 1 / (cap - E), so the tolerance shrinks with the gap
    let tol = ENERGY_TOL * ((cap - b) / cap).min(1.0);
    let energy = brent(residual, a, b, f_a, f_b, tol)?;
    Ok(EnergyLevel { energy, k, lambda_tilde, first, saturated: false })
}

/// `||u||^2_{H_0^1}` of the `k`-profile from the arc integrals
/// `sqrt(2 lambda_tilde) int_0^U sqrt(E - F(v)) dv`, two per arch.
pub fn profile_h1_norm_sq(nl: &Nonlinearity, k: usize, lambda_tilde: f64, first: Side) -> Result<f64> {
    let level = solve_energy_level(nl, k, lambda_tilde, first)?;
    h1_norm_sq_at_level(nl, &level)
}

pub(crate) fn h1_norm_sq_at_level(nl: &Nonlinearity, level: &EnergyLevel) -> Result<f64> {
    let (n1, n2) = arch_counts(level.k);
    let scale = 2.0 * (2.0 * level.lambda_tilde).sqrt();
    let first = unit_arc_integral(nl, level.energy, level.first)?;
    let other = if n2 == 0 {
        0.0
    } else if nl.is_odd() {
        first
    } else {
        unit_arc_integral(nl, level.energy, level.first.flip())?
    };
    Ok(scale * (n1 as f64 * first + n2 as f64 * other))
}

/// `x`-length of one arch on `side`: `sqrt(2) tau`.
pub(crate) fn arch_length(nl: &Nonlinearity, lambda_tilde: f64, energy: f64, side: Side) -> Result<f64> {
    Ok(SQRT_2 * time_map(nl, lambda_tilde, energy, side)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cubic() -> Nonlinearity {
        Nonlinearity::cubic()
    }

    #[test]
    fn positive_inverse_examples() {
        let nl = cubic();
        assert_eq!(positive_inverse(&nl, 0.0).unwrap(), 0.0);
        assert!((positive_inverse(&nl, 0.25).unwrap() - 1.0).abs() < 1e-12);
        // analytic quartic inversion: u^2 = 1 - sqrt(1 - 4E)
        let e = 0.16;
        let expected = (1.0 - (1.0f64 - 4.0 * e).sqrt()).sqrt();
        let u = positive_inverse(&nl, e).unwrap();
        assert!((u - expected).abs() < 1e-14, "{u} vs {expected}");
        assert!((u - 0.632_455_532_033_675_9).abs() < 1e-14);
        assert!((nl.antiderivative(u) - e).abs() <= 1e-13);
        assert!(matches!(positive_inverse(&nl, 0.3), Err(Error::AboveSeparatrix { .. })));
    }

    #[test]
    fn negative_inverse_mirrors_for_odd_reaction() {
        let nl = cubic();
        for e in [1e-6, 0.05, 0.2] {
            let p = positive_inverse(&nl, e).unwrap();
            let m = negative_inverse(&nl, e).unwrap();
            assert_eq!(p, -m);
        }
    }

    #[test]
    fn linear_time_map_is_constant() {
        let lin = Nonlinearity::polynomial("linear", &[0.0, 1.0]).unwrap();
        for e in [1e-6, 0.3, 7.0] {
            let tau = time_map(&lin, 2.0, e, Side::Plus).unwrap();
            assert!((tau - FRAC_PI_2).abs() < 1e-12, "E={e}: {tau}");
        }
    }

    #[test]
    fn small_energy_limit() {
        let nl = cubic();
        let tau = time_map(&nl, 2.0, 1e-8, Side::Plus).unwrap();
        assert!((tau / FRAC_PI_2 - 1.0).abs() < 1e-3);
    }

    #[test]
    fn time_map_symmetric_for_odd_reaction() {
        let nl = cubic();
        for e in [1e-4, 0.1, 0.24] {
            assert_eq!(
                time_map(&nl, 30.0, e, Side::Plus).unwrap(),
                time_map(&nl, 30.0, e, Side::Minus).unwrap()
            );
        }
    }

    #[test]
    fn separatrix_is_singular() {
        let nl = cubic();
        assert!(matches!(time_map(&nl, 10.0, 0.25, Side::Plus), Err(Error::Singular { .. })));
        assert!(matches!(time_map(&nl, 10.0, 0.25 - 1e-13, Side::Plus), Err(Error::Singular { .. })));
    }

    #[test]
    fn no_equilibrium_at_threshold() {
        let nl = cubic();
        assert!(matches!(
            solve_energy_level(&nl, 1, PI * PI, Side::Plus),
            Err(Error::NoEquilibrium { k: 1, .. })
        ));
        assert!(matches!(
            solve_energy_level(&nl, 2, 4.0 * PI * PI - 1e-9, Side::Plus),
            Err(Error::NoEquilibrium { k: 2, .. })
        ));
    }

    #[test]
    fn energy_level_increases_with_lambda() {
        let nl = cubic();
        let e2 = solve_energy_level(&nl, 1, 2.0 * PI * PI, Side::Plus).unwrap();
        let e3 = solve_energy_level(&nl, 1, 3.0 * PI * PI, Side::Plus).unwrap();
        assert!(e2.energy > 0.0 && e2.energy < 0.25);
        assert!(e2.energy < e3.energy);
    }

    #[test]
    fn energy_level_saturates_at_large_lambda() {
        let nl = cubic();
        let level = solve_energy_level(&nl, 1, 1e4, Side::Plus).unwrap();
        assert!(0.25 - level.energy < 0.01);
    }

    #[test]
    fn time_map_decreases_in_lambda_tilde() {
        let nl = cubic();
        let mut prev = f64::INFINITY;
        for lt in [10.0, 20.0, 40.0, 80.0] {
            let tau = time_map(&nl, lt, 0.1, Side::Plus).unwrap();
            assert!(tau < prev);
            prev = tau;
        }
    }

    #[test]
    fn norm_vanishes_near_threshold() {
        let nl = cubic();
        let g = profile_h1_norm_sq(&nl, 1, PI * PI * (1.0 + 1e-6), Side::Plus).unwrap();
        assert!(g < 1e-5, "g = {g}");
    }
}
