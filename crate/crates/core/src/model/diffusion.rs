use std::fmt;
use std::sync::Arc;

use super::nonlinearity::ScalarFn;
use crate::quadrature::integrate_adaptive;
use crate::{Error, Result};

const DERIVATIVE_STEP: f64 = 1e-6;

#[derive(Clone)]
enum Kind {
    Constant(f64),
    Affine { a0: f64, slope: f64 },
    Table(Arc<MonotoneCubic>),
    Custom { a: ScalarFn, a_prime: Option<ScalarFn> },
}

/// The nonlocal coefficient `a(s)`, evaluated at `s = ||u||^2_{H_0^1}`, with
/// its antiderivative `A(s) = int_0^s a`.
#[derive(Clone)]
pub struct DiffusionCoefficient {
    name: String,
    kind: Kind,
    lower_bound_m: f64,
    nondecreasing: bool,
}

impl fmt::Debug for DiffusionCoefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DiffusionCoefficient")
            .field("name", &self.name)
            .field("lower_bound_m", &self.lower_bound_m)
            .field("nondecreasing", &self.nondecreasing)
            .finish()
    }
}

impl DiffusionCoefficient {
    pub fn constant(value: f64) -> Result<Self> {
        if !(value > 0.0 && value.is_finite()) {
            return Err(Error::InvalidInput(format!("constant diffusion must be positive, got {value}")));
        }
        Ok(Self { name: "constant".into(), kind: Kind::Constant(value), lower_bound_m: value, nondecreasing: true })
    }

    /// `a(s) = a0 + slope * s` with `a0 > 0`, `slope >= 0`.
    pub fn affine(a0: f64, slope: f64) -> Result<Self> {
        if !(a0 > 0.0 && a0.is_finite() && slope >= 0.0 && slope.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "affine diffusion needs a0 > 0 and slope >= 0, got a0={a0}, slope={slope}"
            )));
        }
        Ok(Self { name: "affine".into(), kind: Kind::Affine { a0, slope }, lower_bound_m: a0, nondecreasing: true })
    }

    /// Tabulated `(s, a(s))` pairs, strictly increasing in `s`, interpolated by
    /// a monotone (Fritsch-Carlson) cubic and held constant outside the table.
    pub fn table(points: &[(f64, f64)]) -> Result<Self> {
        let interp = MonotoneCubic::new(points)?;
        let min = points.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
        if min <= 0.0 {
            return Err(Error::InvalidInput(format!("tabulated diffusion must stay positive (min {min})")));
        }
        let nondecreasing = points.windows(2).all(|w| w[1].1 >= w[0].1);
        Ok(Self { name: "table".into(), kind: Kind::Table(Arc::new(interp)), lower_bound_m: min, nondecreasing })
    }

    /// Arbitrary evaluator. `A` is obtained by adaptive quadrature; without
    /// `a_prime` the derivative falls back to central differences.
    pub fn custom(
        name: impl Into<String>,
        a: ScalarFn,
        a_prime: Option<ScalarFn>,
        lower_bound_m: f64,
        nondecreasing: bool,
    ) -> Result<Self> {
        if !(lower_bound_m > 0.0) {
            return Err(Error::InvalidInput("lower bound m must be positive".into()));
        }
        Ok(Self { name: name.into(), kind: Kind::Custom { a, a_prime }, lower_bound_m, nondecreasing })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn lower_bound_m(&self) -> f64 {
        self.lower_bound_m
    }

    pub fn is_nondecreasing(&self) -> bool {
        self.nondecreasing
    }

    #[inline]
    pub fn a(&self, s: f64) -> f64 {
        match &self.kind {
            Kind::Constant(c) => *c,
            Kind::Affine { a0, slope } => a0 + slope * s,
            Kind::Table(t) => t.eval(s),
            Kind::Custom { a, .. } => a(s),
        }
    }

    /// `A(s) = int_0^s a(r) dr`.
    pub fn antiderivative(&self, s: f64) -> f64 {
        match &self.kind {
            Kind::Constant(c) => c * s,
            Kind::Affine { a0, slope } => a0 * s + 0.5 * slope * s * s,
            Kind::Table(t) => t.integral(s),
            Kind::Custom { a, .. } => integrate_adaptive(&|r| a(r), 0.0, s, 1e-14 * s.abs().max(1.0)),
        }
    }

    pub fn has_analytic_derivative(&self) -> bool {
        !matches!(self.kind, Kind::Custom { a_prime: None, .. })
    }

    /// `a'(s)`; central difference with step 1e-6 when no analytic form exists.
    pub fn a_prime(&self, s: f64) -> f64 {
        match &self.kind {
            Kind::Constant(_) => 0.0,
            Kind::Affine { slope, .. } => *slope,
            Kind::Table(t) => t.derivative(s),
            Kind::Custom { a_prime: Some(d), .. } => d(s),
            Kind::Custom { a, a_prime: None } => {
                let h = DERIVATIVE_STEP;
                if s >= h {
                    (a(s + h) - a(s - h)) / (2.0 * h)
                } else {
                    (a(s + h) - a(s)) / h
                }
            }
        }
    }
}

/// Piecewise cubic Hermite interpolant with Fritsch-Carlson slopes.
#[derive(Debug, Clone)]
pub struct MonotoneCubic {
    xs: Vec<f64>,
    ys: Vec<f64>,
    slopes: Vec<f64>,
    /// Integral from xs[0] to xs[i].
    cumulative: Vec<f64>,
}

impl MonotoneCubic {
    pub fn new(points: &[(f64, f64)]) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidInput("table needs at least two rows".into()));
        }
        if points.iter().any(|p| !p.0.is_finite() || !p.1.is_finite()) {
            return Err(Error::InvalidInput("table entries must be finite".into()));
        }
        if points.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::InvalidInput("table abscissae must be strictly increasing".into()));
        }
        if points[0].0 < 0.0 {
            return Err(Error::InvalidInput("table abscissae must be non-negative".into()));
        }
        let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
        let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
        let n = xs.len();
        let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
        let delta: Vec<f64> = (0..n - 1).map(|i| (ys[i + 1] - ys[i]) / h[i]).collect();
        let mut slopes = vec![0.0; n];
        if n == 2 {
            slopes[0] = delta[0];
            slopes[1] = delta[0];
        } else {
            for k in 1..n - 1 {
                if delta[k - 1] * delta[k] > 0.0 {
                    let w1 = 2.0 * h[k] + h[k - 1];
                    let w2 = h[k] + 2.0 * h[k - 1];
                    slopes[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
                }
            }
            slopes[0] = end_slope(h[0], h[1], delta[0], delta[1]);
            slopes[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
        }
        let mut cumulative = vec![0.0; n];
        for i in 0..n - 1 {
            let piece = h[i] * (ys[i] + ys[i + 1]) / 2.0 + h[i] * h[i] * (slopes[i] - slopes[i + 1]) / 12.0;
            cumulative[i + 1] = cumulative[i] + piece;
        }
        Ok(Self { xs, ys, slopes, cumulative })
    }

    fn segment(&self, x: f64) -> usize {
        match self.xs.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
            Ok(i) => i.min(self.xs.len() - 2),
            Err(i) => (i.max(1) - 1).min(self.xs.len() - 2),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return self.ys[0];
        }
        if x >= self.xs[n - 1] {
            return self.ys[n - 1];
        }
        let i = self.segment(x);
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        let (t2, t3) = (t * t, t * t * t);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.ys[i] + h10 * h * self.slopes[i] + h01 * self.ys[i + 1] + h11 * h * self.slopes[i + 1]
    }

    pub fn derivative(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x < self.xs[0] || x > self.xs[n - 1] {
            return 0.0;
        }
        let i = self.segment(x);
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        let t2 = t * t;
        let d00 = (6.0 * t2 - 6.0 * t) / h;
        let d10 = 3.0 * t2 - 4.0 * t + 1.0;
        let d01 = (-6.0 * t2 + 6.0 * t) / h;
        let d11 = 3.0 * t2 - 2.0 * t;
        d00 * self.ys[i] + d10 * self.slopes[i] + d01 * self.ys[i + 1] + d11 * self.slopes[i + 1]
    }

    /// Integral from 0; the interpolant is held constant outside the table.
    pub fn integral(&self, x: f64) -> f64 {
        let n = self.xs.len();
        let x0 = self.xs[0];
        if x <= x0 {
            return self.ys[0] * x;
        }
        let head = self.ys[0] * x0;
        if x >= self.xs[n - 1] {
            return head + self.cumulative[n - 1] + self.ys[n - 1] * (x - self.xs[n - 1]);
        }
        let i = self.segment(x);
        let a = self.xs[i];
        // Simpson is exact on a cubic piece.
        let partial = (x - a) / 6.0 * (self.eval(a) + 4.0 * self.eval(0.5 * (a + x)) + self.eval(x));
        head + self.cumulative[i] + partial
    }
}

fn end_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if d.signum() != d0.signum() {
        0.0
    } else if d0.signum() != d1.signum() && d.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn affine_antiderivative() {
        let a = DiffusionCoefficient::affine(1.0, 1.0).unwrap();
        assert_eq!(a.antiderivative(0.0), 0.0);
        assert!((a.antiderivative(2.0) - 4.0).abs() < 1e-15);
        assert_eq!(a.a_prime(3.0), 1.0);
    }

    #[test]
    fn table_reproduces_affine_data() {
        let pts: Vec<(f64, f64)> = (0..=20).map(|i| (i as f64 * 0.5, 1.0 + i as f64 * 0.5)).collect();
        let t = DiffusionCoefficient::table(&pts).unwrap();
        assert!(t.is_nondecreasing());
        for s in [0.0, 0.3, 4.7, 9.99] {
            assert!((t.a(s) - (1.0 + s)).abs() < 1e-12);
            assert!((t.antiderivative(s) - (s + 0.5 * s * s)).abs() < 1e-11);
        }
        // held constant past the last row
        assert!((t.a(50.0) - 11.0).abs() < 1e-12);
    }

    #[test]
    fn table_does_not_overshoot() {
        let pts = [(0.0, 1.0), (1.0, 3.0), (2.0, 3.0), (3.0, 1.0), (4.0, 1.0)];
        let t = MonotoneCubic::new(&pts).unwrap();
        for i in 0..=400 {
            let s = i as f64 * 0.01;
            let v = t.eval(s);
            assert!((1.0 - 1e-12..=3.0 + 1e-12).contains(&v), "s={s} v={v}");
        }
    }

    #[test]
    fn table_rejects_unsorted_abscissae() {
        assert!(DiffusionCoefficient::table(&[(0.0, 1.0), (0.0, 2.0)]).is_err());
    }

    #[test]
    fn custom_uses_quadrature_and_differences() {
        let c = DiffusionCoefficient::custom("sq", Arc::new(|s: f64| 1.0 + s * s), None, 1.0, true).unwrap();
        assert!((c.antiderivative(3.0) - 12.0).abs() < 1e-12);
        assert!((c.a_prime(2.0) - 4.0).abs() < 1e-6);
    }
}
