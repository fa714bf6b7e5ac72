//! Independent check of the time-map construction: integrates the initial
//! value problem `u'' + lambda_tilde f(u) = 0`, `u(0) = 0`, `u'(0) = v0` with
//! a fourth-order symplectic composition of the leapfrog scheme.

use crate::model::{Nonlinearity, Side};
use crate::{Error, Result};

pub const MIN_SHOOTING_STEPS: usize = 1000;

// Yoshida weights: three leapfrog substeps of lengths w1, w0, w1.
const CBRT_2: f64 = 1.259_921_049_894_873_2;
const W1: f64 = 1.0 / (2.0 - CBRT_2);
const W0: f64 = -CBRT_2 / (2.0 - CBRT_2);

#[derive(Debug, Clone)]
pub struct ShotProfile {
    pub u_end: f64,
    pub du_end: f64,
    /// Sign changes strictly inside `(0, 1)`.
    pub zero_count: usize,
    /// `(x, u(x))` at every step.
    pub samples: Vec<[f64; 2]>,
}

/// Fixed-step shooting across `[0, 1]` with `step_count` steps.
pub fn shoot(nl: &Nonlinearity, lambda_tilde: f64, v0: f64, step_count: usize) -> Result<ShotProfile> {
    if step_count < MIN_SHOOTING_STEPS {
        return Err(Error::InvalidInput(format!(
            "step_count must be at least {MIN_SHOOTING_STEPS}, got {step_count}"
        )));
    }
    if !(lambda_tilde > 0.0 && lambda_tilde.is_finite() && v0.is_finite()) {
        return Err(Error::InvalidInput("lambda_tilde must be positive and v0 finite".into()));
    }
    let bound = 10.0 * nl.well(Side::Plus).argsup.abs().max(nl.well(Side::Minus).argsup.abs());
    let h = 1.0 / step_count as f64;
    let accel = |u: f64| -lambda_tilde * nl.f(u);
    let leapfrog = |u: &mut f64, v: &mut f64, dt: f64| {
        *v += 0.5 * dt * accel(*u);
        *u += dt * *v;
        *v += 0.5 * dt * accel(*u);
    };

    let (mut u, mut v) = (0.0, v0);
    let mut samples = Vec::with_capacity(step_count + 1);
    samples.push([0.0, 0.0]);
    for i in 1..=step_count {
        leapfrog(&mut u, &mut v, W1 * h);
        leapfrog(&mut u, &mut v, W0 * h);
        leapfrog(&mut u, &mut v, W1 * h);
        let x = i as f64 * h;
        if !u.is_finite() || u.abs() > bound {
            return Err(Error::Overflow { value: u, x });
        }
        samples.push([x, u]);
    }
    let mut zero_count = 0;
    let mut last = 0.0f64;
    for s in &samples[1..step_count] {
        if s[1] != 0.0 {
            if last != 0.0 && s[1].signum() != last.signum() {
                zero_count += 1;
            }
            last = s[1];
        }
    }
    Ok(ShotProfile { u_end: u, du_end: v, zero_count, samples })
}
