//! Gauss-Legendre rules and a small adaptive integrator.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

/// Nodes and weights on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    /// Newton iteration on the Legendre polynomial, seeded by the Tricomi
    /// asymptotic guess. Accurate to a few ulps for the orders used here.
    pub fn legendre(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre order must be positive");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let half = n.div_ceil(2);
        for i in 0..half {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() <= 1e-16 * x.abs().max(1.0) {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        GaussRule { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// Integrates `f` over [a, b].
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + half * x);
        }
        acc * half
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

const MAX_LOG2_ORDER: usize = 14;

/// Cached rule of order 2^log2.
pub fn power_of_two_rule(log2: usize) -> &'static GaussRule {
    static RULES: [OnceLock<GaussRule>; MAX_LOG2_ORDER + 1] = [const { OnceLock::new() }; MAX_LOG2_ORDER + 1];
    assert!(log2 <= MAX_LOG2_ORDER, "order 2^{log2} exceeds the cached range");
    RULES[log2].get_or_init(|| GaussRule::legendre(1 << log2))
}

pub const MAX_DOUBLING_LOG2: usize = 12;

/// Cached rule of arbitrary order.
pub fn rule(n: usize) -> Arc<GaussRule> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussRule>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("quadrature cache poisoned");
    guard
        .entry(n)
        .or_insert_with(|| Arc::new(GaussRule::legendre(n)))
        .clone()
}

/// Outcome of an order-doubling Gauss-Legendre run.
#[derive(Debug, Clone, Copy)]
pub struct DoublingResult {
    pub value: f64,
    pub order: usize,
    pub relative_change: f64,
    pub converged: bool,
}

/// Integrates with orders 16, 32, ... until two successive values agree to
/// `rel_tol`. The finer of the two estimates is returned.
pub fn integrate_doubling<F: FnMut(f64) -> f64>(a: f64, b: f64, rel_tol: f64, mut f: F) -> DoublingResult {
    let mut prev = power_of_two_rule(4).integrate(a, b, &mut f);
    let mut change = f64::INFINITY;
    for log2 in 5..=MAX_DOUBLING_LOG2 {
        let next = power_of_two_rule(log2).integrate(a, b, &mut f);
        change = (next - prev).abs() / next.abs().max(f64::MIN_POSITIVE);
        if change < rel_tol {
            return DoublingResult { value: next, order: 1 << log2, relative_change: change, converged: true };
        }
        prev = next;
    }
    DoublingResult { value: prev, order: 1 << MAX_DOUBLING_LOG2, relative_change: change, converged: false }
}

/// Adaptive bisection with a 10/20-point Gauss-Legendre pair on each panel.
pub fn integrate_adaptive<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, abs_tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let coarse = power_of_two_rule(3);
    let fine = power_of_two_rule(4);
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        tol: f64,
        depth: usize,
        coarse: &GaussRule,
        fine: &GaussRule,
    ) -> f64 {
        let lo = coarse.integrate(a, b, f);
        let hi = fine.integrate(a, b, f);
        if (hi - lo).abs() <= tol || depth >= 40 {
            return hi;
        }
        let mid = 0.5 * (a + b);
        recurse(f, a, mid, 0.5 * tol, depth + 1, coarse, fine)
            + recurse(f, mid, b, 0.5 * tol, depth + 1, coarse, fine)
    }
    recurse(f, a, b, abs_tol, 0, coarse, fine)
}
