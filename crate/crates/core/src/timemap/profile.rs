use std::f64::consts::FRAC_PI_2;
use std::sync::Arc;

use super::{arch_length, h1_norm_sq_at_level, invert_magnitude, solve_energy_level, EnergyLevel};
use crate::model::{Nonlinearity, Side};
use crate::quadrature::power_of_two_rule;
use crate::{Error, Result};

const TABLE_START_PANELS: usize = 128;
const TABLE_MAX_PANELS: usize = 8192;
const TABLE_REL_TOL: f64 = 1e-11;

/// Cumulative `x(theta)` along the rising half of one arch, where
/// `u(theta) = F^{-1}(E sin^2 theta)` and
/// `dx/dtheta = 2 sqrt(E) sin(theta) / (sqrt(2 lambda_tilde) |f(u)|)`.
#[derive(Debug, Clone)]
struct ArchTable {
    side: Side,
    limit: f64,
    amplitude: f64,
    half_length: f64,
    thetas: Vec<f64>,
    cumulative: Vec<f64>,
}

impl ArchTable {
    fn build(nl: &Nonlinearity, lambda_tilde: f64, energy: f64, side: Side) -> Result<Self> {
        let limit = nl.well(side).argsup.abs();
        let amplitude = invert_magnitude(nl, side, energy, limit);
        let half_length = 0.5 * arch_length(nl, lambda_tilde, energy, side)?;
        let mut panels = TABLE_START_PANELS;
        loop {
            // Graded towards pi/2, where the integrand peaks near the separatrix.
            let thetas: Vec<f64> = (0..=panels)
                .map(|j| {
                    let t = 1.0 - j as f64 / panels as f64;
                    FRAC_PI_2 * (1.0 - t * t)
                })
                .collect();
            let mut table = ArchTable {
                side,
                limit,
                amplitude,
                half_length,
                thetas,
                cumulative: vec![0.0; panels + 1],
            };
            for j in 0..panels {
                let piece = table.panel_integral(nl, lambda_tilde, energy, table.thetas[j], table.thetas[j + 1]);
                table.cumulative[j + 1] = table.cumulative[j] + piece;
            }
            let total = table.cumulative[panels];
            if (total - half_length).abs() <= TABLE_REL_TOL * half_length {
                return Ok(table);
            }
            if panels >= TABLE_MAX_PANELS {
                return Err(Error::QuadratureNotConverged { change: (total - half_length).abs() / half_length });
            }
            panels *= 2;
        }
    }

    fn dx_dtheta(&self, nl: &Nonlinearity, lambda_tilde: f64, energy: f64, theta: f64) -> f64 {
        let s = self.side.sign();
        let sin = theta.sin();
        let u = invert_magnitude(nl, self.side, energy * sin * sin, self.limit);
        2.0 * energy.sqrt() * sin / ((2.0 * lambda_tilde).sqrt() * s * nl.f(s * u))
    }

    fn panel_integral(&self, nl: &Nonlinearity, lambda_tilde: f64, energy: f64, a: f64, b: f64) -> f64 {
        power_of_two_rule(4).integrate(a, b, |t| self.dx_dtheta(nl, lambda_tilde, energy, t))
    }

    /// Angle at which the rising half has travelled `r` in `x`.
    fn theta_at(&self, nl: &Nonlinearity, lambda_tilde: f64, energy: f64, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        let total = *self.cumulative.last().unwrap();
        if r >= total {
            return FRAC_PI_2;
        }
        let j = match self.cumulative.binary_search_by(|v| v.partial_cmp(&r).unwrap()) {
            Ok(j) => return self.thetas[j],
            Err(j) => j - 1,
        };
        let (mut lo, mut hi) = (self.thetas[j], self.thetas[j + 1]);
        let base = self.cumulative[j];
        let x_at = |t: f64| base + self.panel_integral(nl, lambda_tilde, energy, self.thetas[j], t);
        let mut theta = lo + (hi - lo) * (r - base) / (self.cumulative[j + 1] - base);
        for _ in 0..60 {
            let err = x_at(theta) - r;
            if err == 0.0 {
                return theta;
            }
            if err < 0.0 {
                lo = theta;
            } else {
                hi = theta;
            }
            let mut next = theta - err / self.dx_dtheta(nl, lambda_tilde, energy, theta);
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - theta).abs() <= 4.0 * f64::EPSILON || hi - lo <= 4.0 * f64::EPSILON {
                return next;
            }
            theta = next;
        }
        theta
    }
}

/// Continuous representation of a `k`-profile: arches of alternating sign,
/// each symmetric about its midpoint, rebuilt from the level relation.
#[derive(Debug, Clone)]
pub struct ProfileShape {
    nl: Nonlinearity,
    level: EnergyLevel,
    /// (table index, start x, length) per arch.
    arches: Vec<(usize, f64, f64)>,
    tables: Vec<ArchTable>,
}

impl ProfileShape {
    pub fn new(nl: &Nonlinearity, level: EnergyLevel) -> Result<Self> {
        let first = ArchTable::build(nl, level.lambda_tilde, level.energy, level.first)?;
        let mut tables = vec![first];
        if level.k > 1 {
            let other = if nl.is_odd() {
                let mut t = tables[0].clone();
                t.side = level.first.flip();
                t
            } else {
                ArchTable::build(nl, level.lambda_tilde, level.energy, level.first.flip())?
            };
            tables.push(other);
        }
        let mut arches = Vec::with_capacity(level.k);
        let mut start = 0.0;
        for i in 0..level.k {
            let idx = i % 2;
            let len = 2.0 * tables[idx].half_length;
            arches.push((idx, start, len));
            start += len;
        }
        Ok(Self { nl: nl.clone(), level, arches, tables })
    }

    /// The profile `-u`; only meaningful for an odd reaction term.
    pub(crate) fn negated(&self) -> Self {
        let mut out = self.clone();
        out.level.first = self.level.first.flip();
        for t in &mut out.tables {
            t.side = t.side.flip();
        }
        out
    }

    pub fn level(&self) -> &EnergyLevel {
        &self.level
    }

    /// Sum of the arch lengths; 1 up to the energy-level tolerance.
    pub fn total_length(&self) -> f64 {
        self.arches.iter().map(|a| a.2).sum()
    }

    /// Interior zeros (arch junctions).
    pub fn zeros(&self) -> Vec<f64> {
        self.arches.iter().skip(1).map(|a| a.1).collect()
    }

    /// Largest `|u|` over the profile.
    pub fn sup_abs(&self) -> f64 {
        self.tables.iter().map(|t| t.amplitude).fold(0.0, f64::max)
    }

    /// `(u(x), u'(x))`.
    pub fn eval(&self, x: f64) -> (f64, f64) {
        let i = match self.arches.iter().rposition(|a| a.1 <= x) {
            Some(i) => i,
            None => 0,
        };
        let (idx, start, len) = self.arches[i];
        let table = &self.tables[idx];
        let local = (x - start).clamp(0.0, len);
        let rising = local <= 0.5 * len;
        let r = if rising { local } else { len - local };
        let lt = self.level.lambda_tilde;
        let e = self.level.energy;
        let theta = table.theta_at(&self.nl, lt, e, r);
        let sin = theta.sin();
        let mag = invert_magnitude(&self.nl, table.side, e * sin * sin, table.limit);
        let s = table.side.sign();
        let slope = (2.0 * lt * e).sqrt() * theta.cos();
        let du = if rising { s * slope } else { -s * slope };
        (s * mag, du)
    }
}

/// One stationary solution, sampled on a uniform grid.
#[derive(Debug, Clone)]
pub struct EquilibriumProfile {
    /// Number of sign-definite arches; `k + 1` zeros in `[0, 1]`. Zero for the
    /// trivial equilibrium.
    pub k: usize,
    /// Sign on the first subinterval.
    pub sign: Side,
    /// Index among the roots of `d = g(d)` for this `(k, sign)`.
    pub branch: usize,
    pub lambda_tilde: f64,
    /// Orbit energy `E`.
    pub energy: f64,
    /// `||u||^2_{H_0^1}`.
    pub d: f64,
    /// `u'(0)`.
    pub v0: f64,
    /// `max |u|`.
    pub sup_u: f64,
    /// `(x, u(x))` on a uniform grid.
    pub samples: Vec<[f64; 2]>,
    pub shape: Option<Arc<ProfileShape>>,
}

impl EquilibriumProfile {
    pub fn zero(lambda_tilde: f64, grid_points: usize) -> Self {
        let n = grid_points.max(2);
        Self {
            k: 0,
            sign: Side::Plus,
            branch: 0,
            lambda_tilde,
            energy: 0.0,
            d: 0.0,
            v0: 0.0,
            sup_u: 0.0,
            samples: (0..n).map(|i| [i as f64 / (n - 1) as f64, 0.0]).collect(),
            shape: None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.k == 0
    }

    /// Stable identifier: `0`, `u1+`, `u2-`, `u1+.2` for a second branch.
    pub fn id(&self) -> String {
        if self.k == 0 {
            return "0".into();
        }
        let s = match self.sign {
            Side::Plus => '+',
            Side::Minus => '-',
        };
        if self.branch == 0 {
            format!("u{}{}", self.k, s)
        } else {
            format!("u{}{}.{}", self.k, s, self.branch)
        }
    }

    /// `u(x)`: exact through the shape when available, else linear
    /// interpolation of the samples.
    pub fn value_at(&self, x: f64) -> f64 {
        if let Some(shape) = &self.shape {
            return shape.eval(x).0;
        }
        if self.k == 0 {
            return 0.0;
        }
        let n = self.samples.len();
        let pos = self.samples.partition_point(|p| p[0] <= x);
        if pos == 0 {
            return self.samples[0][1];
        }
        if pos >= n {
            return self.samples[n - 1][1];
        }
        let (a, b) = (self.samples[pos - 1], self.samples[pos]);
        let t = (x - a[0]) / (b[0] - a[0]);
        a[1] + t * (b[1] - a[1])
    }
}

/// Rebuilds the `k`-profile at `lambda_tilde` from its energy level.
pub fn reconstruct_profile(
    nl: &Nonlinearity,
    k: usize,
    lambda_tilde: f64,
    sign: Side,
    grid_points: usize,
) -> Result<EquilibriumProfile> {
    if grid_points < 2 {
        return Err(Error::InvalidInput("grid_points must be at least 2".into()));
    }
    let level = solve_energy_level(nl, k, lambda_tilde, sign)?;
    profile_at_level(nl, level, grid_points)
}

pub(crate) fn profile_at_level(nl: &Nonlinearity, level: EnergyLevel, grid_points: usize) -> Result<EquilibriumProfile> {
    let shape = ProfileShape::new(nl, level)?;
    let d = h1_norm_sq_at_level(nl, &level)?;
    let n = grid_points;
    let samples = (0..n)
        .map(|i| {
            let x = i as f64 / (n - 1) as f64;
            [x, shape.eval(x).0]
        })
        .collect();
    Ok(EquilibriumProfile {
        k: level.k,
        sign: level.first,
        branch: 0,
        lambda_tilde: level.lambda_tilde,
        energy: level.energy,
        d,
        v0: level.first.sign() * (2.0 * level.lambda_tilde * level.energy).sqrt(),
        sup_u: shape.sup_abs(),
        samples,
        shape: Some(Arc::new(shape)),
    })
}
