use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use crate::quadrature::integrate_adaptive;
use crate::{Error, Result};

/// Shared scalar evaluator. Must be pure and re-entrant.
pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// One side of the origin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Plus,
    Minus,
}

impl Side {
    pub fn sign(self) -> f64 {
        match self {
            Side::Plus => 1.0,
            Side::Minus => -1.0,
        }
    }

    pub fn flip(self) -> Side {
        match self {
            Side::Plus => Side::Minus,
            Side::Minus => Side::Plus,
        }
    }
}

/// Potential well of `F` on one side of zero: `F` increases from 0 up to the
/// first zero of `f`, where it attains `sup`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Well {
    /// First zero of `f` away from the origin (signed), `None` if `f` keeps
    /// its sign on the scanned range.
    pub zero: Option<f64>,
    /// Location of the supremum of `F` (signed); infinite when unbounded.
    pub argsup: f64,
    /// Supremum of `F` over the well; infinite when `f` has no zero.
    pub sup: f64,
}

struct Inner {
    name: String,
    f: ScalarFn,
    f_prime: ScalarFn,
    antiderivative: ScalarFn,
    odd: bool,
    growth_p: f64,
    wells: [OnceLock<Well>; 2],
}

/// Reaction term `f` bundled with `f'`, the antiderivative `F` (`F(0) = 0`)
/// and its declared structure.
#[derive(Clone)]
pub struct Nonlinearity(Arc<Inner>);

impl fmt::Debug for Nonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Nonlinearity")
            .field("name", &self.0.name)
            .field("odd", &self.0.odd)
            .field("growth_p", &self.0.growth_p)
            .finish()
    }
}

impl Nonlinearity {
    /// `f(u) = u - u^3`, `F(u) = u^2/2 - u^4/4`.
    pub fn cubic() -> Self {
        Self::build(
            "cubic",
            Arc::new(|u: f64| u * (1.0 - u * u)),
            Arc::new(|u: f64| 1.0 - 3.0 * u * u),
            // u^2 (2 - u^2) / 4 keeps relative accuracy near the origin.
            Arc::new(|u: f64| {
                let u2 = u * u;
                0.25 * u2 * (2.0 - u2)
            }),
            true,
            4.0,
        )
    }

    /// `f(u) = sum_i coeffs[i] u^i` with analytic `f'` and `F`.
    pub fn polynomial(name: impl Into<String>, coeffs: &[f64]) -> Result<Self> {
        if coeffs.is_empty() || coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput("polynomial coefficients must be finite and non-empty".into()));
        }
        let mut c = coeffs.to_vec();
        while c.len() > 1 && *c.last().unwrap() == 0.0 {
            c.pop();
        }
        let degree = c.len() - 1;
        let odd = c.iter().step_by(2).all(|&v| v == 0.0);
        let deriv: Vec<f64> = c.iter().enumerate().skip(1).map(|(i, v)| i as f64 * v).collect();
        let integ: Vec<f64> = std::iter::once(0.0)
            .chain(c.iter().enumerate().map(|(i, v)| v / (i as f64 + 1.0)))
            .collect();
        let c = Arc::new(c);
        let deriv = Arc::new(deriv);
        let integ = Arc::new(integ);
        Ok(Self::build(
            name,
            Arc::new(move |u| horner(&c, u)),
            Arc::new(move |u| horner(&deriv, u)),
            Arc::new(move |u| horner(&integ, u)),
            odd,
            (degree as f64 + 1.0).max(2.0),
        ))
    }

    /// User-supplied evaluators. Without an analytic antiderivative, `F` is
    /// built by adaptive quadrature of `f` and memoized per argument.
    pub fn from_closures(
        name: impl Into<String>,
        f: ScalarFn,
        f_prime: ScalarFn,
        antiderivative: Option<ScalarFn>,
        odd: bool,
        growth_p: f64,
    ) -> Self {
        let antiderivative = antiderivative.unwrap_or_else(|| {
            let f = f.clone();
            let cache: Arc<Mutex<HashMap<u64, f64>>> = Arc::new(Mutex::new(HashMap::new()));
            Arc::new(move |u: f64| {
                if let Some(v) = cache.lock().expect("cache poisoned").get(&u.to_bits()) {
                    return *v;
                }
                let v = integrate_adaptive(&|s| f(s), 0.0, u, 1e-15 * u.abs().max(1.0));
                cache.lock().expect("cache poisoned").insert(u.to_bits(), v);
                v
            })
        });
        Self::build(name, f, f_prime, antiderivative, odd, growth_p)
    }

    fn build(
        name: impl Into<String>,
        f: ScalarFn,
        f_prime: ScalarFn,
        antiderivative: ScalarFn,
        odd: bool,
        growth_p: f64,
    ) -> Self {
        Nonlinearity(Arc::new(Inner {
            name: name.into(),
            f,
            f_prime,
            antiderivative,
            odd,
            growth_p,
            wells: [OnceLock::new(), OnceLock::new()],
        }))
    }

    pub fn name(&self) -> &str {
        &self.0.name
    }

    #[inline]
    pub fn f(&self, u: f64) -> f64 {
        (self.0.f)(u)
    }

    #[inline]
    pub fn f_prime(&self, u: f64) -> f64 {
        (self.0.f_prime)(u)
    }

    /// `F(u) = int_0^u f`.
    #[inline]
    pub fn antiderivative(&self, u: f64) -> f64 {
        (self.0.antiderivative)(u)
    }

    pub fn is_odd(&self) -> bool {
        self.0.odd
    }

    pub fn growth_p(&self) -> f64 {
        self.0.growth_p
    }

    /// Potential well on `side`, computed once and cached.
    pub fn well(&self, side: Side) -> Well {
        let slot = match side {
            Side::Plus => &self.0.wells[0],
            Side::Minus => &self.0.wells[1],
        };
        *slot.get_or_init(|| compute_well(self, side))
    }
}

fn horner(c: &[f64], u: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &v| acc * u + v)
}

const ZERO_SCAN_STEP: f64 = 1e-3;
const ZERO_SCAN_FINE_LIMIT: f64 = 10.0;
const ZERO_SCAN_LIMIT: f64 = 1e6;

fn compute_well(nl: &Nonlinearity, side: Side) -> Well {
    let s = side.sign();
    let positive = |u: f64| s * nl.f(s * u) > 0.0;

    // Locate the first sign change of f away from zero.
    let mut prev = 0.0;
    let mut bracket = None;
    let mut i = 1usize;
    loop {
        let u = if (i as f64) * ZERO_SCAN_STEP <= ZERO_SCAN_FINE_LIMIT {
            i as f64 * ZERO_SCAN_STEP
        } else {
            prev * 1.5
        };
        if u > ZERO_SCAN_LIMIT {
            break;
        }
        if !positive(u) {
            bracket = Some((prev, u));
            break;
        }
        prev = u;
        i += 1;
    }

    let Some((mut lo, mut hi)) = bracket else {
        return Well { zero: None, argsup: s * f64::INFINITY, sup: f64::INFINITY };
    };
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if positive(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let zero = if nl.f(s * hi) == 0.0 { hi } else { lo };

    // Golden-section maximization of F on [0, zero].
    let big_f = |u: f64| nl.antiderivative(s * u);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (0.0, zero);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (big_f(c), big_f(d));
    while (b - a) > 1e-13 * zero {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = big_f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = big_f(d);
        }
    }
    let mut best = (0.5 * (a + b), big_f(0.5 * (a + b)));
    for cand in [a, b, zero] {
        let v = big_f(cand);
        if v > best.1 {
            best = (cand, v);
        }
    }
    Well { zero: Some(s * zero), argsup: s * best.0, sup: best.1 }
}
