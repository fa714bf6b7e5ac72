use std::fmt;

use super::ProblemSpec;

/// Sample grid for the reaction term: u in [-3, 3], step 1e-3.
pub const U_GRID_MAX: f64 = 3.0;
pub const U_GRID_STEP: f64 = 1e-3;
/// Sample grid for the diffusion coefficient: s in [0, 100], step 0.1.
pub const S_GRID_MAX: f64 = 100.0;
pub const S_GRID_STEP: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Assumption {
    /// f(0) = 0
    A2,
    /// f'(0) = 1
    A3,
    /// concave for u > 0, convex for u < 0
    A4,
    /// growth and dissipation
    A5,
    /// a(s) >= m > 0
    A6,
    /// a non-decreasing
    A8,
    /// declared oddness matches samples
    Odd,
    /// F agrees with a quadrature of f
    Antiderivative,
}

impl fmt::Display for Assumption {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Assumption::A2 => "A2",
            Assumption::A3 => "A3",
            Assumption::A4 => "A4",
            Assumption::A5 => "A5",
            Assumption::A6 => "A6",
            Assumption::A8 => "A8",
            Assumption::Odd => "odd",
            Assumption::Antiderivative => "antiderivative",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone)]
pub struct AssumptionCheck {
    pub id: Assumption,
    pub passed: bool,
    /// The sampled test can only falsify the condition.
    pub advisory: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Default)]
pub struct AssumptionReport {
    pub checks: Vec<AssumptionCheck>,
}

impl AssumptionReport {
    pub fn get(&self, id: Assumption) -> Option<&AssumptionCheck> {
        self.checks.iter().find(|c| c.id == id)
    }

    pub fn passed(&self, id: Assumption) -> bool {
        self.get(id).is_some_and(|c| c.passed)
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

fn u_grid() -> impl Iterator<Item = f64> {
    let n = (U_GRID_MAX / U_GRID_STEP).round() as i64;
    (-n..=n).map(|i| i as f64 * U_GRID_STEP)
}

/// Checks the standing assumptions on sampled grids. Never aborts; every
/// outcome is reported.
pub fn validate_assumptions(spec: &ProblemSpec) -> AssumptionReport {
    let nl = spec.nonlinearity();
    let a = spec.diffusion();
    let mut checks = Vec::new();

    let f0 = nl.f(0.0);
    checks.push(AssumptionCheck {
        id: Assumption::A2,
        passed: f0 == 0.0,
        advisory: false,
        detail: format!("f(0) = {f0:e}"),
    });

    let fp0 = nl.f_prime(0.0);
    checks.push(AssumptionCheck {
        id: Assumption::A3,
        passed: (fp0 - 1.0).abs() <= 1e-12,
        advisory: false,
        detail: format!("f'(0) = {fp0}"),
    });

    // Second differences on the positive and negative halves.
    let h = U_GRID_STEP;
    let n = (U_GRID_MAX / h).round() as i64;
    let mut worst_pos = f64::NEG_INFINITY;
    let mut worst_neg = f64::INFINITY;
    for i in 1..n {
        let u = i as f64 * h;
        let d_pos = nl.f(u - h) - 2.0 * nl.f(u) + nl.f(u + h);
        let d_neg = nl.f(-u - h) - 2.0 * nl.f(-u) + nl.f(-u + h);
        worst_pos = worst_pos.max(d_pos);
        worst_neg = worst_neg.min(d_neg);
    }
    checks.push(AssumptionCheck {
        id: Assumption::A4,
        passed: worst_pos < 0.0 && worst_neg > 0.0,
        advisory: false,
        detail: format!("max second difference for u>0: {worst_pos:e}; min for u<0: {worst_neg:e}"),
    });

    // Dissipation at the outer part of the grid: f(u)u <= C3 - C4|u|^p.
    let p = nl.growth_p();
    let outer = u_grid().filter(|u| u.abs() >= 2.0);
    let (passed, advisory, detail) = if p > 2.0 {
        let worst = outer.map(|u| nl.f(u) * u / u.abs().powf(p)).fold(f64::NEG_INFINITY, f64::max);
        (worst < 0.0, false, format!("max f(u)u/|u|^p on 2<=|u|<=3: {worst:e} (p = {p})"))
    } else {
        let worst = outer.map(|u| nl.f(u) / u).fold(f64::NEG_INFINITY, f64::max);
        (
            worst <= 0.0,
            true,
            format!("p = 2: max f(u)/u on 2<=|u|<=3 is {worst:e}; the limsup condition can only be falsified by sampling"),
        )
    };
    checks.push(AssumptionCheck { id: Assumption::A5, passed, advisory, detail });

    let ns = (S_GRID_MAX / S_GRID_STEP).round() as usize;
    let samples: Vec<f64> = (0..=ns).map(|i| a.a(i as f64 * S_GRID_STEP)).collect();
    let m = a.lower_bound_m();
    let min_a = samples.iter().copied().fold(f64::INFINITY, f64::min);
    checks.push(AssumptionCheck {
        id: Assumption::A6,
        passed: m > 0.0 && min_a >= m,
        advisory: false,
        detail: format!("m = {m}, sampled min a = {min_a}"),
    });

    let drops = samples.windows(2).filter(|w| w[1] < w[0]).count();
    checks.push(AssumptionCheck {
        id: Assumption::A8,
        passed: drops == 0,
        advisory: false,
        detail: format!(
            "{drops} decreasing steps on the s grid; declared nondecreasing = {}",
            a.is_nondecreasing()
        ),
    });

    if nl.is_odd() {
        let bad = u_grid().filter(|&u| nl.f(-u) != -nl.f(u)).count();
        checks.push(AssumptionCheck {
            id: Assumption::Odd,
            passed: bad == 0,
            advisory: false,
            detail: format!("{bad} grid points violate f(-u) = -f(u)"),
        });
    }

    let mut worst_rel: f64 = 0.0;
    for i in 0..=12 {
        let u = -3.0 + 0.5 * i as f64;
        let q = crate::quadrature::integrate_adaptive(&|s| nl.f(s), 0.0, u, 1e-14);
        let big_f = nl.antiderivative(u);
        worst_rel = worst_rel.max((big_f - q).abs() / big_f.abs().max(1.0));
    }
    checks.push(AssumptionCheck {
        id: Assumption::Antiderivative,
        passed: worst_rel <= 1e-10,
        advisory: false,
        detail: format!("max relative mismatch F vs quadrature: {worst_rel:e}"),
    });

    AssumptionReport { checks }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DiffusionCoefficient, Nonlinearity};

    fn spec(nl: Nonlinearity, a: DiffusionCoefficient) -> ProblemSpec {
        ProblemSpec::new(10.0, nl, a).unwrap()
    }

    #[test]
    fn cubic_with_constant_diffusion_passes_everything() {
        let r = validate_assumptions(&spec(Nonlinearity::cubic(), DiffusionCoefficient::constant(1.0).unwrap()));
        assert!(r.all_passed(), "{r:?}");
    }

    #[test]
    fn linear_reaction_fails_concavity_and_dissipation() {
        let lin = Nonlinearity::polynomial("linear", &[0.0, 1.0]).unwrap();
        let r = validate_assumptions(&spec(lin, DiffusionCoefficient::constant(1.0).unwrap()));
        assert!(r.passed(Assumption::A2));
        assert!(r.passed(Assumption::A3));
        assert!(!r.passed(Assumption::A4));
        assert!(!r.passed(Assumption::A5));
    }

    #[test]
    fn affine_diffusion_is_bounded_below_and_monotone() {
        let a = DiffusionCoefficient::affine(1.0, 1.0).unwrap();
        assert_eq!(a.lower_bound_m(), 1.0);
        let r = validate_assumptions(&spec(Nonlinearity::cubic(), a));
        assert!(r.passed(Assumption::A6));
        assert!(r.passed(Assumption::A8));
    }

    #[test]
    fn bump_diffusion_fails_monotonicity() {
        let a = DiffusionCoefficient::table(&[(0.0, 1.0), (1.0, 3.0), (2.0, 1.0)]).unwrap();
        let r = validate_assumptions(&spec(Nonlinearity::cubic(), a));
        assert!(r.passed(Assumption::A6));
        assert!(!r.passed(Assumption::A8));
    }

    #[test]
    fn cubic_sup_of_antiderivative_on_grid() {
        let nl = Nonlinearity::cubic();
        let (arg, max) = (0..=3000)
            .map(|i| i as f64 * 1e-3)
            .map(|u| (u, nl.antiderivative(u)))
            .fold((0.0, f64::NEG_INFINITY), |acc, v| if v.1 > acc.1 { v } else { acc });
        assert!((arg - 1.0).abs() < 1e-9);
        assert!((max - 0.25).abs() < 1e-9);
    }

    #[test]
    fn antiderivative_even_for_odd_reaction() {
        let nl = Nonlinearity::cubic();
        for u in u_grid() {
            assert!((nl.antiderivative(-u) - nl.antiderivative(u)).abs() <= 1e-14);
        }
    }
}
