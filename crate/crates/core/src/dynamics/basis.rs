use std::collections::HashMap;
use std::f64::consts::SQRT_2;
use std::sync::{Arc, Mutex, OnceLock};

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Forward FFT plans shared by every sine transform of a given length.
fn plan(len: usize) -> Arc<dyn Fft<f64>> {
    static PLANS: OnceLock<Mutex<HashMap<usize, Arc<dyn Fft<f64>>>>> = OnceLock::new();
    let plans = PLANS.get_or_init(|| Mutex::new(HashMap::new()));
    plans
        .lock()
        .expect("fft plan cache poisoned")
        .entry(len)
        .or_insert_with(|| FftPlanner::new().plan_fft_forward(len))
        .clone()
}

/// Buffers for [`SineTransform::apply`].
#[derive(Debug, Default)]
pub struct SineScratch {
    buf: Vec<Complex64>,
    work: Vec<Complex64>,
}

/// `y_k = sum_{j=1}^{M-1} x_j sin(pi j k / M)` for `k = 1..M-1`, through a
/// complex FFT of the odd extension of `x` over `2M` points.
#[derive(Clone)]
pub struct SineTransform {
    intervals: usize,
    fft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for SineTransform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SineTransform").field("intervals", &self.intervals).finish()
    }
}

impl SineTransform {
    pub fn new(intervals: usize) -> Self {
        assert!(intervals >= 2, "sine transform needs at least two intervals");
        Self { intervals, fft: plan(2 * intervals) }
    }

    pub fn intervals(&self) -> usize {
        self.intervals
    }

    /// `input[j - 1] = x_j` (shorter inputs are zero padded); writes
    /// `scale * y_k` to `out[k - 1]` for `k = 1..=out.len()`.
    pub fn apply(&self, input: &[f64], scale: f64, out: &mut [f64], scratch: &mut SineScratch) {
        let m = self.intervals;
        let len = 2 * m;
        debug_assert!(input.len() < m && out.len() < m);
        scratch.buf.clear();
        scratch.buf.resize(len, Complex64::new(0.0, 0.0));
        for (j, &x) in input.iter().enumerate() {
            scratch.buf[j + 1].re = x;
            scratch.buf[len - j - 1].re = -x;
        }
        let need = self.fft.get_inplace_scratch_len();
        if scratch.work.len() < need {
            scratch.work.resize(need, Complex64::new(0.0, 0.0));
        }
        self.fft.process_with_scratch(&mut scratch.buf, &mut scratch.work[..need]);
        // forward transform of the odd extension: Z_k = -2i y_k
        let s = -0.5 * scale;
        for (k, o) in out.iter_mut().enumerate() {
            *o = s * scratch.buf[k + 1].im;
        }
    }
}

/// Orthonormal sine basis `w_j(x) = sqrt(2) sin(j pi x)`, `j = 1..=n`, with
/// collocation on the `M = 4n` point grid `x_m = m / M`.
#[derive(Debug)]
pub struct SineBasis {
    n: usize,
    transform: SineTransform,
}

impl SineBasis {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "sine basis needs at least one mode");
        Self { n, transform: SineTransform::new(4 * n) }
    }

    /// Cached basis shared across trajectories.
    pub fn shared(n: usize) -> Arc<SineBasis> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<SineBasis>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        cache.lock().expect("basis cache poisoned").entry(n).or_insert_with(|| Arc::new(SineBasis::new(n))).clone()
    }

    pub fn modes(&self) -> usize {
        self.n
    }

    /// Number of collocation intervals `M = 4n`.
    pub fn grid_intervals(&self) -> usize {
        self.transform.intervals()
    }

    /// Interior collocation nodes `x_1, ..., x_{M-1}`.
    pub fn nodes(&self) -> Vec<f64> {
        let m = self.grid_intervals();
        (1..m).map(|i| i as f64 / m as f64).collect()
    }

    /// `u(x_i) = sum_j c_j w_j(x_i)` at the interior nodes; `out.len() == M - 1`.
    pub fn synthesize(&self, coeffs: &[f64], out: &mut [f64], scratch: &mut SineScratch) {
        debug_assert_eq!(coeffs.len(), self.n);
        debug_assert_eq!(out.len(), self.grid_intervals() - 1);
        self.transform.apply(coeffs, SQRT_2, out, scratch);
    }

    /// `<g, w_j>` by the trapezoid rule on the collocation grid from interior
    /// values `g(x_1), ..., g(x_{M-1})` (`g(0) = g(1) = 0`).
    pub fn project(&self, values: &[f64], out: &mut [f64], scratch: &mut SineScratch) {
        debug_assert_eq!(values.len(), self.grid_intervals() - 1);
        debug_assert_eq!(out.len(), self.n);
        self.transform.apply(values, SQRT_2 / self.grid_intervals() as f64, out, scratch);
    }
}

/// Values of `sum_j c_j w_j` on `points` uniform nodes over `[0, 1]`,
/// including both endpoints.
pub fn evaluate_on_uniform_grid(coeffs: &[f64], points: usize) -> Vec<f64> {
    assert!(points >= 3);
    let m = points - 1;
    // sin(j pi k / m) has period 2m in j and flips sign under j -> 2m - j
    let mut folded = vec![0.0; m - 1];
    for (j, &c) in coeffs.iter().enumerate() {
        let r = (j + 1) % (2 * m);
        if r == 0 || r == m {
            continue;
        }
        if r < m {
            folded[r - 1] += c;
        } else {
            folded[2 * m - r - 1] -= c;
        }
    }
    let mut values = vec![0.0; points];
    SineTransform::new(m).apply(&folded, SQRT_2, &mut values[1..m], &mut SineScratch::default());
    values
}
