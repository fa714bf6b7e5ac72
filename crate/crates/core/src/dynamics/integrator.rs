use std::io::Write;

use super::basis::{SineBasis, SineScratch};
use super::lap::{lap_number, DEFAULT_LAP_GRID_POINTS};
use super::{h1_norm_sq, mode_stiffness, GalerkinState, ProjectedEquilibrium};
use crate::model::ProblemSpec;
use crate::{Error, Result};

pub const TRAJECTORY_CSV_HEADER: &str = "t,energy,lap,l2_norm,h1_norm,dist_to_nearest_eq";

#[derive(Debug, Clone, PartialEq)]
pub struct IntegrationOptions {
    pub dt: f64,
    pub t_end: f64,
    pub sample_interval: f64,
    pub lap_grid_points: usize,
    /// `None` selects `1e-7 max(1, sup |u|)` per sample.
    pub deadband: Option<f64>,
    /// A step whose energy rises by more than `energy_tol` is retried as two
    /// half steps, at most this many times.
    pub max_halvings: u32,
    pub energy_tol: f64,
    /// Stop at the first sample with `||du/dt||_{L^2}` below this.
    pub settle_threshold: Option<f64>,
    /// Keep a reflection-parity class of modes that vanishes initially at
    /// exactly zero (it is invariant under the flow).
    pub preserve_parity: bool,
}

impl Default for IntegrationOptions {
    fn default() -> Self {
        Self {
            dt: 1e-4,
            t_end: 200.0,
            sample_interval: 1e-2,
            lap_grid_points: DEFAULT_LAP_GRID_POINTS,
            deadband: None,
            max_halvings: 4,
            energy_tol: 1e-8,
            settle_threshold: None,
            preserve_parity: true,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct IntegrationStats {
    /// Accepted steps, counting each half step.
    pub steps: usize,
    /// Steps retried with a halved time step.
    pub rejected: usize,
    /// Accepted steps whose energy still rose by more than the tolerance.
    pub energy_violations: usize,
    /// Largest energy increase over any accepted step (`<= 0` when monotone).
    pub max_energy_increase: f64,
    pub settled: bool,
    pub final_rhs_norm: f64,
    /// Divergence bound on `||u||_{L^2}`.
    pub l2_bound: f64,
}

/// Samples of one integration, every `sample_interval` and at the final time.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<GalerkinState>,
    pub energies: Vec<f64>,
    pub lap_numbers: Vec<usize>,
    /// `int ||u_t||^2 dt` accumulated since the previous sample (0 for the first).
    pub dissipation: Vec<f64>,
    pub l2_norms: Vec<f64>,
    pub h1_norms: Vec<f64>,
    pub rhs_norms: Vec<f64>,
    pub stats: IntegrationStats,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_state(&self) -> &GalerkinState {
        self.states.last().expect("trajectory has at least the initial sample")
    }

    /// Sampled energies that rise by more than `tol`.
    pub fn energy_increases(&self, tol: f64) -> usize {
        self.energies.windows(2).filter(|w| w[1] > w[0] + tol).count()
    }

    /// Samples where the lap number goes up.
    pub fn lap_increases(&self) -> usize {
        self.lap_numbers.windows(2).filter(|w| w[1] > w[0]).count()
    }

    pub fn write_csv<W: Write>(&self, mut out: W, equilibria: Option<&[ProjectedEquilibrium]>) -> std::io::Result<()> {
        writeln!(out, "{TRAJECTORY_CSV_HEADER}")?;
        for i in 0..self.len() {
            let dist = equilibria
                .and_then(|eqs| super::nearest_equilibrium(&self.states[i].coeffs, eqs))
                .map_or(f64::NAN, |(_, d)| d);
            writeln!(
                out,
                "{:.16e},{:.16e},{},{:.16e},{:.16e},{:.16e}",
                self.times[i], self.energies[i], self.lap_numbers[i], self.l2_norms[i], self.h1_norms[i], dist
            )?;
        }
        Ok(())
    }
}

/// `|sum_{i < l <= j} dissipation_l + E_j - E_i|`, the defect of the energy
/// equality between samples `i < j`.
pub fn energy_equality_residual(traj: &Trajectory, i: usize, j: usize) -> f64 {
    signed_energy_balance(traj, i, j).abs()
}

/// `(E_i - E_j) - sum_{i < l <= j} dissipation_l`.
pub fn signed_energy_balance(traj: &Trajectory, i: usize, j: usize) -> f64 {
    assert!(i < j && j < traj.len(), "need sample indices i < j < len");
    let dissipated: f64 = traj.dissipation[i + 1..=j].iter().sum();
    traj.energies[i] - traj.energies[j] - dissipated
}

/// Reusable buffers and problem data for the Galerkin right-hand side.
struct Workspace<'a> {
    spec: &'a ProblemSpec,
    basis: std::sync::Arc<SineBasis>,
    stiffness: Vec<f64>,
    /// `<1, w_j>`.
    load: Vec<f64>,
    u: Vec<f64>,
    nonlinear: Vec<f64>,
    projected: Vec<f64>,
    scratch: SineScratch,
    /// Modes `j` with `j % 2 == r` stay zero when `frozen[r]` holds.
    frozen: [bool; 2],
}

impl<'a> Workspace<'a> {
    fn new(spec: &'a ProblemSpec, n: usize) -> Self {
        let basis = SineBasis::shared(n);
        let m = basis.grid_intervals();
        Self {
            spec,
            basis,
            stiffness: (1..=n).map(mode_stiffness).collect(),
            load: (1..=n)
                .map(|j| {
                    if j % 2 == 1 {
                        2.0 * std::f64::consts::SQRT_2 / (j as f64 * std::f64::consts::PI)
                    } else {
                        0.0
                    }
                })
                .collect(),
            u: vec![0.0; m - 1],
            nonlinear: vec![0.0; m - 1],
            projected: vec![0.0; n],
            scratch: SineScratch::default(),
            frozen: [false; 2],
        }
    }

    fn synthesize(&mut self, coeffs: &[f64]) {
        self.basis.synthesize(coeffs, &mut self.u, &mut self.scratch);
    }

    /// `<f(u), w_j>` from the current grid values.
    fn project_reaction(&mut self) {
        let nl = self.spec.nonlinearity();
        for (g, &u) in self.nonlinear.iter_mut().zip(&self.u) {
            *g = nl.f(u);
        }
        self.basis.project(&self.nonlinear, &mut self.projected, &mut self.scratch);
        for (j, p) in self.projected.iter_mut().enumerate() {
            if self.frozen[(j + 1) % 2] {
                *p = 0.0;
            }
        }
    }

    /// Odd modes are symmetric about `x = 1/2` and even modes antisymmetric.
    /// A vanishing even class is invariant for every `f`; a vanishing odd
    /// class only for odd `f` without forcing.
    fn freeze_invariant_parity(&mut self, coeffs: &[f64]) {
        let vanishes = |r: usize| coeffs.iter().enumerate().all(|(j, &c)| (j + 1) % 2 != r || c == 0.0);
        self.frozen[0] = vanishes(0);
        self.frozen[1] = vanishes(1) && self.spec.nonlinearity().is_odd() && self.spec.h() == 0.0;
    }

    /// Lyapunov energy from coefficients and their (current) grid values.
    fn energy(&self, coeffs: &[f64]) -> f64 {
        let s: f64 = coeffs.iter().zip(&self.stiffness).map(|(c, k)| k * c * c).sum();
        let nl = self.spec.nonlinearity();
        let potential: f64 = self.u.iter().map(|&u| nl.antiderivative(u)).sum::<f64>() / self.basis.grid_intervals() as f64;
        let forcing: f64 = coeffs.iter().zip(&self.load).map(|(c, b)| c * b).sum();
        0.5 * self.spec.diffusion().antiderivative(s) - self.spec.lambda() * potential - self.spec.h() * forcing
    }

    /// Right-hand side from the current grid values; requires `project_reaction`.
    fn rhs_into(&self, coeffs: &[f64], out: &mut [f64]) {
        let a = self.spec.diffusion().a(h1_norm_sq(coeffs));
        let (lambda, h) = (self.spec.lambda(), self.spec.h());
        for j in 0..coeffs.len() {
            out[j] = -a * self.stiffness[j] * coeffs[j] + lambda * self.projected[j] + h * self.load[j];
        }
    }
}

/// `dc_i/dt = -a(||u||^2) i^2 pi^2 c_i + lambda <f(u), w_i> + h <1, w_i>`,
/// with the reaction projected by collocation on `4N` nodes.
pub fn galerkin_rhs(state: &GalerkinState, spec: &ProblemSpec) -> Vec<f64> {
    let n = state.modes();
    if n == 0 {
        return Vec::new();
    }
    let mut ws = Workspace::new(spec, n);
    ws.synthesize(&state.coeffs);
    ws.project_reaction();
    let mut out = vec![0.0; n];
    ws.rhs_into(&state.coeffs, &mut out);
    out
}

/// `1/2 A(||u||^2_{H_0^1}) - lambda int F(u) - h int u`, the integral of `F`
/// by the trapezoid rule on the `4N` collocation grid.
pub fn lyapunov_energy(state: &GalerkinState, spec: &ProblemSpec) -> f64 {
    let n = state.modes();
    if n == 0 {
        return 0.0;
    }
    let mut ws = Workspace::new(spec, n);
    ws.synthesize(&state.coeffs);
    ws.energy(&state.coeffs)
}

/// `10 sqrt(max(||u_0||^2, kappa / delta))` from the dissipation estimate
/// `d/dt ||u||^2 <= -delta ||u||^2 + kappa`, with `delta = m pi^2`,
/// `kappa = 2 lambda c + 2 h^2 / (m pi^2)` and
/// `c = sup_u (f(u) u - m pi^2 u^2 / (4 lambda))` sampled on `|u| <= 100`.
fn divergence_bound(spec: &ProblemSpec, initial_l2_sq: f64) -> f64 {
    let m = spec.diffusion().lower_bound_m();
    let delta = m * std::f64::consts::PI.powi(2);
    let lambda = spec.lambda();
    let nl = spec.nonlinearity();
    let c = (-100_000..=100_000)
        .map(|i| {
            let u = i as f64 * 1e-3;
            nl.f(u) * u - delta * u * u / (4.0 * lambda)
        })
        .fold(0.0f64, f64::max);
    let kappa = 2.0 * lambda * c + 2.0 * spec.h().powi(2) / delta;
    10.0 * initial_l2_sq.max(kappa / delta).max(1.0).sqrt()
}

/// First-order semi-implicit Galerkin integration: with the coefficient frozen
/// at `a_n = a(||u^n||^2)`,
/// `(1 + dt a_n j^2 pi^2) c_j^{n+1} = c_j^n + dt (lambda <f(u^n), w_j> + h <1, w_j>)`.
pub fn integrate(initial: &GalerkinState, spec: &ProblemSpec, options: &IntegrationOptions) -> Result<Trajectory> {
    let n = initial.modes();
    if n == 0 {
        return Err(Error::InvalidInput("state needs at least one mode".into()));
    }
    if !(options.dt > 0.0 && options.dt.is_finite()) {
        return Err(Error::InvalidInput(format!("dt must be positive, got {}", options.dt)));
    }
    if !(options.t_end > 0.0 && options.t_end.is_finite()) {
        return Err(Error::InvalidInput(format!("t_end must be positive, got {}", options.t_end)));
    }
    if !(options.sample_interval > 0.0) {
        return Err(Error::InvalidInput("sample_interval must be positive".into()));
    }
    if !initial.is_finite() {
        return Err(Error::InvalidInput("initial state has non-finite coefficients".into()));
    }

    let total_steps = (options.t_end / options.dt).round().max(1.0) as usize;
    let sample_every = ((options.sample_interval / options.dt).round() as usize).max(1);
    let bound = divergence_bound(spec, initial.l2_norm_sq());

    let mut ws = Workspace::new(spec, n);
    if options.preserve_parity {
        ws.freeze_invariant_parity(&initial.coeffs);
    }
    let mut c = initial.coeffs.clone();
    let t0 = initial.time;
    ws.synthesize(&c);
    let mut energy = ws.energy(&c);

    let mut traj = Trajectory {
        times: Vec::new(),
        states: Vec::new(),
        energies: Vec::new(),
        lap_numbers: Vec::new(),
        dissipation: Vec::new(),
        l2_norms: Vec::new(),
        h1_norms: Vec::new(),
        rhs_norms: Vec::new(),
        stats: IntegrationStats { max_energy_increase: f64::NEG_INFINITY, l2_bound: bound, ..Default::default() },
    };
    let mut rhs = vec![0.0; n];
    let mut stepper = Stepper { next: vec![0.0; n], saved_u: Vec::new(), options };

    let mut dissipated = 0.0;
    let mut record = |traj: &mut Trajectory, ws: &mut Workspace, c: &[f64], t: f64, energy: f64, dissipated: f64| {
        ws.project_reaction();
        ws.rhs_into(c, &mut rhs);
        let rhs_norm = rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
        let state = GalerkinState { coeffs: c.to_vec(), time: t };
        traj.lap_numbers.push(lap_number(&state, options.lap_grid_points, options.deadband));
        traj.times.push(t);
        traj.energies.push(energy);
        traj.dissipation.push(dissipated);
        traj.l2_norms.push(state.l2_norm_sq().sqrt());
        traj.h1_norms.push(state.h1_norm_sq().sqrt());
        traj.rhs_norms.push(rhs_norm);
        traj.states.push(state);
        rhs_norm
    };
    let rhs0 = record(&mut traj, &mut ws, &c, t0, energy, 0.0);
    if options.settle_threshold.is_some_and(|th| rhs0 < th) {
        traj.stats.settled = true;
    }

    let mut step = 0;
    while step < total_steps && !traj.stats.settled {
        dissipated += stepper.advance(&mut ws, &mut c, &mut energy, options.dt, 0, &mut traj.stats);
        step += 1;
        let l2 = c.iter().map(|v| v * v).sum::<f64>().sqrt();
        let t = t0 + step as f64 * options.dt;
        if !(l2 <= bound) {
            return Err(Error::Diverged { time: t, norm: l2, bound });
        }
        if step % sample_every == 0 || step == total_steps {
            let rhs_norm = record(&mut traj, &mut ws, &c, t, energy, dissipated);
            dissipated = 0.0;
            if options.settle_threshold.is_some_and(|th| rhs_norm < th) {
                traj.stats.settled = true;
            }
        }
    }
    traj.stats.final_rhs_norm = *traj.rhs_norms.last().unwrap();
    if traj.stats.steps == 0 {
        traj.stats.max_energy_increase = 0.0;
    }
    Ok(traj)
}

struct Stepper<'o> {
    next: Vec<f64>,
    saved_u: Vec<f64>,
    options: &'o IntegrationOptions,
}

impl Stepper<'_> {
    /// Advances `c` by `dt`, splitting the step while the energy rises by more
    /// than the tolerance. `ws.u` holds the grid values of `c` on entry and
    /// exit. Returns the dissipation `sum ||dc||^2 / dt` of the accepted steps.
    fn advance(
        &mut self,
        ws: &mut Workspace,
        c: &mut Vec<f64>,
        energy: &mut f64,
        dt: f64,
        depth: u32,
        stats: &mut IntegrationStats,
    ) -> f64 {
        let spec = ws.spec;
        let a = spec.diffusion().a(h1_norm_sq(c));
        let (lambda, h) = (spec.lambda(), spec.h());
        ws.project_reaction();
        let mut step_sq = 0.0;
        for j in 0..c.len() {
            let v = (c[j] + dt * (lambda * ws.projected[j] + h * ws.load[j])) / (1.0 + dt * a * ws.stiffness[j]);
            let d = v - c[j];
            step_sq += d * d;
            self.next[j] = v;
        }
        self.saved_u.clone_from(&ws.u);
        ws.synthesize(&self.next);
        let new_energy = ws.energy(&self.next);
        let increase = new_energy - *energy;
        if increase > self.options.energy_tol && depth < self.options.max_halvings {
            stats.rejected += 1;
            std::mem::swap(&mut ws.u, &mut self.saved_u);
            let first = self.advance(ws, c, energy, 0.5 * dt, depth + 1, stats);
            return first + self.advance(ws, c, energy, 0.5 * dt, depth + 1, stats);
        }
        if increase > self.options.energy_tol {
            stats.energy_violations += 1;
        }
        stats.max_energy_increase = stats.max_energy_increase.max(increase);
        stats.steps += 1;
        c.copy_from_slice(&self.next);
        *energy = new_energy;
        step_sq / dt
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DiffusionCoefficient, Nonlinearity};
    use std::f64::consts::PI;

    fn spec(lambda: f64, diffusion: DiffusionCoefficient) -> ProblemSpec {
        ProblemSpec::new(lambda, Nonlinearity::cubic(), diffusion).unwrap()
    }

    #[test]
    fn zero_is_stationary() {
        let s = spec(50.0, DiffusionCoefficient::affine(1.0, 1.0).unwrap());
        let zero = GalerkinState::zero(16);
        assert!(galerkin_rhs(&zero, &s).iter().all(|&v| v == 0.0));
        assert_eq!(lyapunov_energy(&zero, &s), 0.0);
        let opts = IntegrationOptions { t_end: 0.1, ..Default::default() };
        let traj = integrate(&zero, &s, &opts).unwrap();
        assert!(traj.states.iter().all(|st| st.coeffs.iter().all(|&c| c == 0.0)));
        assert_eq!(traj.len(), 11);
    }

    #[test]
    fn single_mode_rhs_matches_linearization() {
        let s = spec(50.0, DiffusionCoefficient::affine(1.0, 1.0).unwrap());
        let eps = 1e-4;
        let st = GalerkinState::new(vec![eps, 0.0, 0.0, 0.0]);
        let rhs = galerkin_rhs(&st, &s);
        let linear = (50.0 - (1.0 + eps * eps * PI * PI) * PI * PI) * eps;
        assert!((rhs[0] - linear).abs() < 10.0 * 50.0 * eps.powi(3));
        assert!(rhs[1].abs() < 1e-18);
    }

    #[test]
    fn classical_energy_for_unit_coefficient() {
        let s = spec(20.0, DiffusionCoefficient::constant(1.0).unwrap());
        let st = GalerkinState::new(vec![0.3, -0.1, 0.05]);
        let e = lyapunov_energy(&st, &s);
        // direct quadrature of 1/2 |u'|^2 - lambda F(u)
        let n = 20000;
        let mut direct = 0.0;
        for i in 0..n {
            let x = (i as f64 + 0.5) / n as f64;
            let (mut u, mut du) = (0.0, 0.0);
            for (j, c) in st.coeffs.iter().enumerate() {
                let k = (j + 1) as f64 * PI;
                u += c * 2f64.sqrt() * (k * x).sin();
                du += c * 2f64.sqrt() * k * (k * x).cos();
            }
            direct += (0.5 * du * du - 20.0 * (0.5 * u * u - 0.25 * u.powi(4))) / n as f64;
        }
        assert!((e - direct).abs() < 1e-8, "{e} vs {direct}");
    }

    #[test]
    fn energy_decreases_and_dissipation_balances() {
        let s = spec(50.0, DiffusionCoefficient::affine(1.0, 1.0).unwrap());
        let init = GalerkinState::new(vec![0.2, 0.3, -0.1, 0.05, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let opts = IntegrationOptions { t_end: 1.0, ..Default::default() };
        let traj = integrate(&init, &s, &opts).unwrap();
        assert_eq!(traj.stats.energy_violations, 0);
        assert_eq!(traj.energy_increases(1e-8), 0);
        assert_eq!(traj.lap_increases(), 0);
        let drop = traj.energies[0] - traj.energies[traj.len() - 1];
        let residual = energy_equality_residual(&traj, 0, traj.len() - 1);
        assert!(drop > 0.0 && residual < 1e-2 * drop, "drop {drop}, residual {residual}");
    }

    #[test]
    fn odd_symmetry_is_exact() {
        let s = spec(50.0, DiffusionCoefficient::affine(1.0, 1.0).unwrap());
        let init = GalerkinState::new(vec![0.2, 0.3, -0.1, 0.05, 0.01, 0.0, 0.0, 0.0]);
        let opts = IntegrationOptions { t_end: 0.2, ..Default::default() };
        let a = integrate(&init, &s, &opts).unwrap();
        let b = integrate(&init.negated(), &s, &opts).unwrap();
        for (p, q) in a.final_state().coeffs.iter().zip(&b.final_state().coeffs) {
            assert_eq!(*p, -*q);
        }
    }

    #[test]
    fn settles_on_stable_equilibrium() {
        let s = spec(20.0, DiffusionCoefficient::constant(1.0).unwrap());
        let opts = IntegrationOptions { t_end: 50.0, settle_threshold: Some(1e-7), ..Default::default() };
        let traj = integrate(&GalerkinState::single_mode(32, 1, 1e-3), &s, &opts).unwrap();
        assert!(traj.stats.settled);
        assert!(traj.final_state().time < 50.0);
        assert_eq!(*traj.lap_numbers.last().unwrap(), 1);
    }

    #[test]
    fn antisymmetric_data_stays_antisymmetric() {
        let s = spec(50.0, DiffusionCoefficient::affine(1.0, 1.0).unwrap());
        let opts = IntegrationOptions { t_end: 5.0, settle_threshold: Some(1e-7), ..Default::default() };
        let traj = integrate(&GalerkinState::single_mode(32, 2, 1e-3), &s, &opts).unwrap();
        let last = traj.final_state();
        assert!(last.coeffs.iter().step_by(2).all(|&c| c == 0.0));
        assert_eq!(*traj.lap_numbers.last().unwrap(), 2);
    }

    #[test]
    fn rejects_bad_options() {
        let s = spec(20.0, DiffusionCoefficient::constant(1.0).unwrap());
        let st = GalerkinState::zero(4);
        assert!(integrate(&st, &s, &IntegrationOptions { dt: 0.0, ..Default::default() }).is_err());
        assert!(integrate(&st, &s, &IntegrationOptions { t_end: -1.0, ..Default::default() }).is_err());
    }
}
