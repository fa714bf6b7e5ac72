//! Stationary points of the nonlocal problem: `u` solves the frozen problem
//! with `lambda_tilde = lambda / a(d)` and `d = ||u||^2_{H_0^1}`, i.e. `d` is a
//! fixed point of `g(d) = ||u_k^d||^2_{H_0^1}`.

mod bifurcation;
mod io;
mod shooting;

pub use bifurcation::{bifurcation_diagram, BifurcationDiagram, BifurcationRow, BIFURCATION_CSV_HEADER};
pub use io::{parse_equilibria_json, EquilibriumRecord};
pub use shooting::{shoot, ShotProfile, MIN_SHOOTING_STEPS};

use std::collections::HashMap;
use std::f64::consts::PI;

use crate::model::{ProblemSpec, Side};
use crate::roots::bisect;
use crate::timemap::{profile_h1_norm_sq, solve_energy_level, EquilibriumProfile};
use crate::{Error, Result};

/// Upper end of the fixed-point scan and of the threshold search.
pub const D_MAX: f64 = 1e3;
const THRESHOLD_STEP: f64 = 1e-2;
const THRESHOLD_TOL: f64 = 1e-10;
const ROOT_TOL: f64 = 1e-11;
const MIN_SCAN_STEP: f64 = 1e-3;
const SCAN_INTERVALS: f64 = 1e4;
const TOUCH_TOL: f64 = 1e-9;
const SLOPE_STEP: f64 = 1e-5;
const DEGENERATE_SLOPE_TOL: f64 = 1e-4;

/// Functional `l(u)` entering the diffusion coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[non_exhaustive]
pub enum NormSelector {
    /// `||u||^2_{H_0^1}`.
    #[default]
    H1Squared,
}

fn level_ratio(k: usize, spec: &ProblemSpec) -> f64 {
    let kk = k as f64;
    spec.lambda() / (PI * PI * kk * kk)
}

/// `sup{d : lambda > a(s) pi^2 k^2 for all s <= d}`: `0` when the condition
/// already fails at `d = 0`, `+inf` when it holds on all of `[0, D_MAX]`.
pub fn d_k_threshold(k: usize, spec: &ProblemSpec) -> f64 {
    let level = level_ratio(k, spec);
    let a = |d: f64| spec.diffusion().a(d);
    if a(0.0) >= level {
        return 0.0;
    }
    let mut prev = 0.0;
    let mut d = THRESHOLD_STEP;
    while d <= D_MAX + 0.5 * THRESHOLD_STEP {
        if a(d) >= level {
            let f = |s: f64| Ok(a(s) - level);
            return bisect(f, prev, d, a(prev) - level, THRESHOLD_TOL).expect("infallible");
        }
        prev = d;
        d += THRESHOLD_STEP;
    }
    f64::INFINITY
}

/// `||u_k^d||^2` where `u_k^d` is the `k`-profile of the frozen problem at
/// `lambda_tilde = lambda / a(d)`; `0` once `a(d) >= lambda / (pi^2 k^2)`.
pub fn g_of_d(k: usize, sign: Side, d: f64, spec: &ProblemSpec, norm: NormSelector) -> Result<f64> {
    match norm {
        NormSelector::H1Squared => {}
    }
    if !(d >= 0.0) {
        return Err(Error::InvalidInput(format!("d must be non-negative, got {d}")));
    }
    let a = spec.diffusion().a(d);
    if a >= level_ratio(k, spec) {
        return Ok(0.0);
    }
    match profile_h1_norm_sq(spec.nonlinearity(), k, spec.lambda() / a, sign) {
        Err(Error::NoEquilibrium { .. }) => Ok(0.0),
        other => other,
    }
}

/// One root of `d = g(d)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPoint {
    pub d: f64,
    /// `g(d) - d` at the returned root.
    pub residual: f64,
    /// `|g'(d) - 1| < 1e-4`: the graph of `g` is tangent to the bisector.
    pub degenerate: bool,
    /// Found as a touching minimum of `|g - d|` rather than a sign change.
    pub touching: bool,
}

/// Outcome of the fixed-point scan for one `(k, sign)`.
#[derive(Debug, Clone, Default)]
pub struct FixedPointScan {
    pub roots: Vec<FixedPoint>,
    pub scan_end: f64,
    pub scan_step: f64,
    pub warnings: Vec<String>,
}

/// Memoizes `g` by `lambda_tilde`, which is all it depends on.
struct GCache<'a> {
    k: usize,
    sign: Side,
    spec: &'a ProblemSpec,
    values: HashMap<u64, f64>,
}

impl<'a> GCache<'a> {
    fn new(k: usize, sign: Side, spec: &'a ProblemSpec) -> Self {
        Self { k, sign, spec, values: HashMap::new() }
    }

    fn g(&mut self, d: f64) -> Result<f64> {
        let a = self.spec.diffusion().a(d);
        if a >= level_ratio(self.k, self.spec) {
            return Ok(0.0);
        }
        let key = (self.spec.lambda() / a).to_bits();
        if let Some(v) = self.values.get(&key) {
            return Ok(*v);
        }
        let v = g_of_d(self.k, self.sign, d, self.spec, NormSelector::H1Squared)?;
        self.values.insert(key, v);
        Ok(v)
    }

    fn residual(&mut self, d: f64) -> Result<f64> {
        Ok(self.g(d)? - d)
    }
}

/// All roots `d > 0` of `g(d) - d`: sign-change scan with step
/// `max(1e-3, min(d_k, D_MAX) / 1e4)`, each bracket refined by bisection to
/// `1e-11`. For nondecreasing `a` the scan stops at `d_k`, beyond which the
/// residual is `-d < 0`. Otherwise it covers `[0, D_MAX]`, cut for odd `f` to
/// just above `G(lambda / m)` with `m` the lower bound of `a`, which bounds
/// `g` because the profile norm increases with `lambda_tilde`.
pub fn solve_nonlocal_fixed_points(k: usize, sign: Side, spec: &ProblemSpec) -> Result<FixedPointScan> {
    spec.require_unforced()?;
    if k == 0 {
        return Err(Error::InvalidInput("profile index k must be at least 1".into()));
    }
    let d_k = d_k_threshold(k, spec);
    let mut scan = FixedPointScan::default();
    let monotone = spec.diffusion().is_nondecreasing();
    if monotone && d_k <= 0.0 {
        return Ok(scan);
    }
    let step = MIN_SCAN_STEP.max(d_k.min(D_MAX) / SCAN_INTERVALS);
    let end = if monotone {
        d_k.min(D_MAX)
    } else if spec.nonlinearity().is_odd() {
        let m = spec.diffusion().lower_bound_m();
        let level = spec.lambda() / (m * PI * PI * (k * k) as f64);
        let bound = if level > 1.0 {
            match profile_h1_norm_sq(spec.nonlinearity(), k, spec.lambda() / m, sign) {
                Ok(v) => v,
                Err(Error::NoEquilibrium { .. }) => 0.0,
                Err(e) => return Err(e),
            }
        } else {
            0.0
        };
        (bound * (1.0 + 1e-2) + 2.0 * step).min(D_MAX)
    } else {
        D_MAX
    };
    scan.scan_end = end;
    scan.scan_step = step;
    let mut cache = GCache::new(k, sign, spec);

    let n = (end / step).ceil() as usize;
    let grid: Vec<f64> = (0..=n).map(|i| (i as f64 * step).min(end)).collect();
    let values = grid.iter().map(|&d| cache.residual(d)).collect::<Result<Vec<_>>>()?;

    let mut brackets = Vec::new();
    for i in 0..n {
        let (r0, r1) = (values[i], values[i + 1]);
        if r0 == 0.0 {
            // d = 0 with g(0) = 0 is the trivial solution, not a profile
            if grid[i] > 0.0 {
                brackets.push((grid[i], grid[i], false));
            }
        } else if r0.signum() != r1.signum() && r1 != 0.0 {
            brackets.push((grid[i], grid[i + 1], false));
        } else if i > 0 && r0.signum() == values[i - 1].signum() && r0.signum() == r1.signum() {
            let touch = r0.abs() <= values[i - 1].abs() && r0.abs() <= r1.abs() && r0.abs() < TOUCH_TOL;
            if touch {
                brackets.push((grid[i], grid[i], true));
            }
        }
    }
    if values[n] == 0.0 {
        brackets.push((grid[n], grid[n], false));
    }

    for (lo, hi, touching) in brackets {
        let d = if lo == hi {
            lo
        } else {
            let r_lo = cache.residual(lo)?;
            bisect(|d| cache.residual(d), lo, hi, r_lo, ROOT_TOL)?
        };
        let residual = cache.residual(d)?;
        let lo_d = (d - SLOPE_STEP).max(0.0);
        let hi_d = d + SLOPE_STEP;
        let slope = (cache.g(hi_d)? - cache.g(lo_d)?) / (hi_d - lo_d);
        scan.roots.push(FixedPoint { d, residual, degenerate: (slope - 1.0).abs() < DEGENERATE_SLOPE_TOL, touching });
    }

    if end >= D_MAX {
        let g_end = cache.g(D_MAX)?;
        if g_end > D_MAX {
            scan.warnings.push(format!("g(d_max) = {g_end} exceeds d_max = {D_MAX}; roots beyond the scan are possible"));
        }
    }
    if monotone && scan.roots.len() != 1 {
        scan.warnings.push(format!(
            "expected exactly one root of g(d) = d for k = {k} under a nondecreasing coefficient, found {}",
            scan.roots.len()
        ));
    }
    Ok(scan)
}

/// Every stationary point of the nonlocal problem at `spec.lambda()`.
#[derive(Debug, Clone)]
pub struct EquilibriumSet {
    pub lambda: f64,
    /// Zero first, then by `k`, sign (`+` before `-`) and branch.
    pub entries: Vec<EquilibriumProfile>,
    pub includes_zero: bool,
    pub warnings: Vec<String>,
}

impl EquilibriumSet {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&EquilibriumProfile> {
        self.entries.iter().find(|e| e.id() == id)
    }

    pub fn ids(&self) -> Vec<String> {
        self.entries.iter().map(|e| e.id()).collect()
    }

    /// Largest `k` present.
    pub fn max_k(&self) -> usize {
        self.entries.iter().map(|e| e.k).max().unwrap_or(0)
    }
}

/// Enumerates `0` and every `u_k^{+-}` for which `d = g(d)` has a root.
/// Candidate `k` run while `m pi^2 k^2 < lambda`, `m` the lower bound of `a`.
pub fn enumerate_equilibria(spec: &ProblemSpec) -> Result<EquilibriumSet> {
    spec.require_unforced()?;
    let nl = spec.nonlinearity();
    let diffusion = spec.diffusion();
    let grid = spec.grid_points();
    let m = diffusion.lower_bound_m().min(diffusion.a(0.0));
    let mut set = EquilibriumSet {
        lambda: spec.lambda(),
        entries: vec![EquilibriumProfile::zero(spec.lambda() / diffusion.a(0.0), grid)],
        includes_zero: true,
        warnings: Vec::new(),
    };
    let mut k = 1usize;
    while m * PI * PI * ((k * k) as f64) < spec.lambda() {
        let plus = branches(k, Side::Plus, spec, grid, &mut set.warnings)?;
        let minus = if nl.is_odd() {
            plus.iter().map(mirror).collect()
        } else {
            branches(k, Side::Minus, spec, grid, &mut set.warnings)?
        };
        set.entries.extend(plus);
        set.entries.extend(minus);
        k += 1;
    }
    Ok(set)
}

fn branches(
    k: usize,
    sign: Side,
    spec: &ProblemSpec,
    grid: usize,
    warnings: &mut Vec<String>,
) -> Result<Vec<EquilibriumProfile>> {
    let scan = solve_nonlocal_fixed_points(k, sign, spec)?;
    warnings.extend(scan.warnings);
    scan.roots
        .iter()
        .enumerate()
        .map(|(branch, root)| {
            let lambda_tilde = spec.lambda() / spec.diffusion().a(root.d);
            let level = solve_energy_level(spec.nonlinearity(), k, lambda_tilde, sign)?;
            let mut profile = crate::timemap::profile_at_level(spec.nonlinearity(), level, grid)?;
            profile.d = root.d;
            profile.branch = branch;
            Ok(profile)
        })
        .collect()
}

/// `u -> -u` partner of a profile of an odd reaction term.
fn mirror(p: &EquilibriumProfile) -> EquilibriumProfile {
    let mut q = p.clone();
    q.sign = p.sign.flip();
    q.v0 = -p.v0;
    for s in &mut q.samples {
        s[1] = -s[1];
    }
    q.shape = p.shape.as_ref().map(|s| std::sync::Arc::new(s.negated()));
    q
}
