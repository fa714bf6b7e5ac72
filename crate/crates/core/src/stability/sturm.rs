use nalgebra::DMatrix;

/// Coefficients of `det(x I - A)`, highest degree first, by Faddeev-LeVerrier.
pub fn characteristic_polynomial(a: &DMatrix<f64>) -> Vec<f64> {
    let n = a.nrows();
    let mut coeffs = vec![1.0];
    let mut m = DMatrix::<f64>::zeros(n, n);
    let identity = DMatrix::<f64>::identity(n, n);
    for k in 1..=n {
        m = a * &m + &identity * coeffs[k - 1];
        let c = -(a * &m).trace() / k as f64;
        coeffs.push(c);
    }
    coeffs
}

fn eval(p: &[f64], x: f64) -> f64 {
    p.iter().fold(0.0, |acc, c| acc * x + c)
}

fn derivative(p: &[f64]) -> Vec<f64> {
    let deg = p.len() - 1;
    p[..deg].iter().enumerate().map(|(i, c)| c * (deg - i) as f64).collect()
}

/// Remainder of `a / b`, both highest degree first.
fn remainder(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut r = a.to_vec();
    while r.len() >= b.len() {
        let q = r[0] / b[0];
        for (i, bi) in b.iter().enumerate() {
            r[i] -= q * bi;
        }
        r.remove(0);
    }
    let scale = a.iter().fold(0.0f64, |m, c| m.max(c.abs())).max(1.0);
    while r.first().is_some_and(|c| c.abs() <= 1e-12 * scale) {
        r.remove(0);
    }
    r
}

fn sign_changes(values: impl Iterator<Item = f64>) -> usize {
    let mut last = 0.0f64;
    let mut changes = 0;
    for v in values.filter(|v| *v != 0.0) {
        if last != 0.0 && v.signum() != last.signum() {
            changes += 1;
        }
        last = v;
    }
    changes
}

/// Number of distinct real roots of `p` in `(threshold, +inf)` from its Sturm
/// sequence.
pub fn sturm_count_above(p: &[f64], threshold: f64) -> usize {
    if p.len() < 2 {
        return 0;
    }
    let mut seq = vec![p.to_vec(), derivative(p)];
    loop {
        let n = seq.len();
        if seq[n - 1].len() <= 1 {
            break;
        }
        let r = remainder(&seq[n - 2], &seq[n - 1]);
        if r.is_empty() {
            break;
        }
        seq.push(r.iter().map(|c| -c).collect());
    }
    let at_threshold = sign_changes(seq.iter().map(|q| eval(q, threshold)));
    // sign at +inf is the sign of the leading coefficient
    let at_infinity = sign_changes(seq.iter().map(|q| q[0]));
    at_threshold.saturating_sub(at_infinity)
}
