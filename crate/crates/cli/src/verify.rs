//! The acceptance suite: twelve criteria, each with a measured value, a
//! tolerance and a runtime budget.

use std::cell::OnceCell;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use anyhow::{anyhow, bail, Context};
use chafee::dynamics::{
    energy_equality_residual, integrate, project_profile, random_state, GalerkinState, IntegrationOptions,
    DEFAULT_MODES, DEFAULT_OMEGA_TOL,
};
use chafee::equilibria::{enumerate_equilibria, g_of_d, shoot, solve_nonlocal_fixed_points, NormSelector};
use chafee::model::{DiffusionCoefficient, Nonlinearity, ProblemSpec, Side};
use chafee::stability::{check_morse_order, linearization_report, probe_connections, ProbeOptions};
use chafee::timemap::{profile_h1_norm_sq, reconstruct_profile, time_map, EquilibriumProfile};
use serde::Serialize;

use crate::config::RunConfig;

/// Criterion number, 1 to 12.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct CriterionId(u8);

impl CriterionId {
    pub const ALL: [CriterionId; 12] = {
        let mut ids = [CriterionId(1); 12];
        let mut i = 0;
        while i < 12 {
            ids[i] = CriterionId(i as u8 + 1);
            i += 1;
        }
        ids
    };

    pub fn new(n: u8) -> anyhow::Result<Self> {
        if (1..=12).contains(&n) {
            Ok(CriterionId(n))
        } else {
            bail!("criterion ids run from 1 to 12, got {n}")
        }
    }

    pub fn get(self) -> u8 {
        self.0
    }

    pub fn title(self) -> &'static str {
        match self.0 {
            1 => "equilibrium cascade",
            2 => "nonlocal uniqueness",
            3 => "small-energy time map",
            4 => "time map vs shooting",
            5 => "profile norm monotone in lambda",
            6 => "multiple fixed points for dipping a",
            7 => "Lyapunov monotonicity",
            8 => "lap-number monotonicity",
            9 => "spectral instability at zero",
            10 => "stability of u1",
            11 => "connection graph",
            12 => "energy-equality consistency",
            _ => unreachable!("criterion ids are validated on construction"),
        }
    }

    /// Wall-clock budget in seconds.
    pub fn budget(self) -> f64 {
        match self.0 {
            1 | 2 | 6 => 10.0,
            3 => 1.0,
            4 | 5 | 9 => 5.0,
            7 | 8 => 120.0,
            10 | 12 => 60.0,
            11 => 180.0,
            _ => unreachable!("criterion ids are validated on construction"),
        }
    }
}

impl FromStr for CriterionId {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> anyhow::Result<Self> {
        let n: u8 = s.trim().parse().with_context(|| format!("criterion id \"{s}\""))?;
        CriterionId::new(n)
    }
}

impl fmt::Display for CriterionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Parses `1,7,8` or `1-4,11`.
pub fn parse_selection(s: &str) -> anyhow::Result<Vec<CriterionId>> {
    let mut ids = Vec::new();
    for part in s.split(',').filter(|p| !p.trim().is_empty()) {
        match part.split_once('-') {
            Some((a, b)) => {
                let (a, b): (CriterionId, CriterionId) = (a.parse()?, b.parse()?);
                if a > b {
                    bail!("empty criterion range \"{part}\"");
                }
                ids.extend((a.0..=b.0).map(CriterionId));
            }
            None => ids.push(part.parse()?),
        }
    }
    ids.sort();
    ids.dedup();
    if ids.is_empty() {
        bail!("no criteria selected");
    }
    Ok(ids)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
}

/// How `measured` is compared with `tolerance`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    /// `measured < tolerance`.
    Below,
    /// `measured <= tolerance`.
    AtMost,
    /// `measured >= tolerance`.
    AtLeast,
}

impl Comparison {
    fn holds(self, measured: f64, tolerance: f64) -> bool {
        match self {
            Comparison::Below => measured < tolerance,
            Comparison::AtMost => measured <= tolerance,
            Comparison::AtLeast => measured >= tolerance,
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            Comparison::Below => "<",
            Comparison::AtMost => "<=",
            Comparison::AtLeast => ">=",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CriterionResult {
    pub criterion_id: CriterionId,
    pub title: &'static str,
    pub status: Status,
    pub measured: f64,
    pub tolerance: f64,
    pub comparison: Comparison,
    pub runtime_seconds: f64,
    pub budget_seconds: f64,
    pub detail: String,
}

impl CriterionResult {
    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }

    /// One summary line.
    pub fn line(&self) -> String {
        let tag = if self.passed() { "PASS" } else { "FAIL" };
        format!(
            "[{tag}] criterion {:>2} {}: measured {:.3e} {} {:.3e} ({:.2} s of {:.0} s) {}",
            self.criterion_id,
            self.title,
            self.measured,
            self.comparison.symbol(),
            self.tolerance,
            self.runtime_seconds,
            self.budget_seconds,
            self.detail
        )
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub passed: bool,
    pub criteria: Vec<CriterionResult>,
}

impl Report {
    pub fn new(criteria: Vec<CriterionResult>) -> Self {
        Self { passed: criteria.iter().all(CriterionResult::passed), criteria }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Solver settings the dynamic criteria take from the run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifySettings {
    pub modes: usize,
    pub dt: f64,
    pub seed: u64,
}

impl Default for VerifySettings {
    fn default() -> Self {
        Self { modes: DEFAULT_MODES, dt: IntegrationOptions::default().dt, seed: 0 }
    }
}

impl VerifySettings {
    pub fn from_config(config: &RunConfig) -> Self {
        Self { modes: config.solver.modes, dt: config.solver.dt, seed: config.seed }
    }
}

/// Measurement of one criterion before timing is applied.
struct Outcome {
    measured: f64,
    tolerance: f64,
    comparison: Comparison,
    /// Conditions beyond the headline comparison.
    extra_ok: bool,
    detail: String,
}

impl Outcome {
    fn new(measured: f64, comparison: Comparison, tolerance: f64, detail: String) -> Self {
        Self { measured, tolerance, comparison, extra_ok: true, detail }
    }

    fn requiring(mut self, ok: bool) -> Self {
        self.extra_ok &= ok;
        self
    }
}

/// Runs criteria, sharing the random-trajectory runs between 7 and 8.
pub struct Verifier {
    settings: VerifySettings,
    random_runs: OnceCell<(anyhow::Result<RandomRuns>, f64)>,
}

impl Verifier {
    pub fn new(settings: VerifySettings) -> Self {
        Self { settings, random_runs: OnceCell::new() }
    }

    pub fn run(&self, id: CriterionId) -> CriterionResult {
        let start = Instant::now();
        let outcome = match id.0 {
            1 => cascade(),
            2 => nonlocal_uniqueness(),
            3 => small_energy_limit(),
            4 => shooting_equivalence(),
            5 => profile_norm_monotone(),
            6 => dipping_multiplicity(),
            7 | 8 => self.random_criterion(id),
            9 => instability_at_zero(&self.settings),
            10 => stability_of_first_profiles(&self.settings),
            11 => connection_graph(&self.settings),
            12 => energy_equality(&self.settings),
            _ => unreachable!("criterion ids are validated on construction"),
        };
        let mut runtime = start.elapsed().as_secs_f64();
        if matches!(id.0, 7 | 8) {
            // both criteria are charged for the shared run
            runtime = runtime.max(self.random_runs.get().map_or(0.0, |r| r.1));
        }
        let budget = id.budget();
        let (status, measured, tolerance, comparison, mut detail) = match outcome {
            Ok(o) => {
                let ok = o.extra_ok && o.comparison.holds(o.measured, o.tolerance);
                (if ok { Status::Pass } else { Status::Fail }, o.measured, o.tolerance, o.comparison, o.detail)
            }
            Err(e) => (Status::Fail, f64::NAN, f64::NAN, Comparison::AtMost, format!("error: {e:#}")),
        };
        let status = if runtime > budget {
            detail.push_str(&format!("; over budget ({runtime:.1} s > {budget:.0} s)"));
            Status::Fail
        } else {
            status
        };
        CriterionResult {
            criterion_id: id,
            title: id.title(),
            status,
            measured,
            tolerance,
            comparison,
            runtime_seconds: runtime,
            budget_seconds: budget,
            detail,
        }
    }

    fn random_criterion(&self, id: CriterionId) -> anyhow::Result<Outcome> {
        let (runs, _) = self.random_runs.get_or_init(|| {
            let start = Instant::now();
            let runs = random_runs(&self.settings);
            (runs, start.elapsed().as_secs_f64())
        });
        let runs = runs.as_ref().map_err(|e| anyhow!("{e:#}"))?;
        Ok(if id.0 == 7 {
            Outcome::new(
                runs.energy_violations as f64,
                Comparison::AtMost,
                0.0,
                format!(
                    "{} trajectories, {} steps, largest step increase {:.3e}",
                    runs.count, runs.steps, runs.max_energy_increase
                ),
            )
            .requiring(runs.max_energy_increase <= RANDOM_ENERGY_TOL)
        } else {
            Outcome::new(
                runs.lap_increases as f64,
                Comparison::AtMost,
                0.0,
                format!("{} trajectories, {} samples, {} lap increase(s)", runs.count, runs.samples, runs.lap_increases),
            )
        })
    }
}

/// Runs one criterion on its own.
pub fn run(id: CriterionId, settings: &VerifySettings) -> CriterionResult {
    Verifier::new(settings.clone()).run(id)
}

/// Runs a selection in order.
pub fn run_all(ids: &[CriterionId], settings: &VerifySettings) -> Report {
    let verifier = Verifier::new(settings.clone());
    Report::new(ids.iter().map(|&id| verifier.run(id)).collect())
}

fn cubic_spec(lambda: f64, diffusion: DiffusionCoefficient) -> anyhow::Result<ProblemSpec> {
    Ok(ProblemSpec::new(lambda, Nonlinearity::cubic(), diffusion)?)
}

fn constant() -> DiffusionCoefficient {
    DiffusionCoefficient::constant(1.0).expect("positive constant")
}

fn affine() -> DiffusionCoefficient {
    DiffusionCoefficient::affine(1.0, 1.0).expect("valid affine coefficient")
}

/// Continuous coefficient with `a(0) = a(6) = 1` that dips below
/// `20 / pi^2` between a bump and the return, so `a(d) = 20 / pi^2` is crossed
/// twice before `d = 6`.
pub fn dipping_table() -> DiffusionCoefficient {
    DiffusionCoefficient::table(&[(0.0, 1.0), (1.0, 2.2), (3.5, 0.6), (6.0, 1.0), (10.0, 1.0)])
        .expect("valid table")
}

fn unstable_modes(lambda: f64, a0: f64, modes: usize) -> usize {
    (1..=modes).filter(|&j| lambda > a0 * PI * PI * (j * j) as f64).count()
}

fn cascade() -> anyhow::Result<Outcome> {
    let mut misses = 0usize;
    let mut counts = Vec::new();
    for (lambda, expected) in [(5.0, 1usize), (20.0, 3), (50.0, 5), (95.0, 7)] {
        let n = enumerate_equilibria(&cubic_spec(lambda, constant())?)?.len();
        misses += n.abs_diff(expected);
        counts.push(format!("lambda {lambda}: {n}/{expected}"));
    }
    Ok(Outcome::new(misses as f64, Comparison::AtMost, 0.0, counts.join(", ")))
}

fn nonlocal_uniqueness() -> anyhow::Result<Outcome> {
    let spec = cubic_spec(50.0, affine())?;
    let set = enumerate_equilibria(&spec)?;
    let mut worst = 0.0f64;
    let mut per_k = Vec::new();
    for k in 1..=2 {
        let scan = solve_nonlocal_fixed_points(k, Side::Plus, &spec)?;
        per_k.push(scan.roots.len());
        for root in &scan.roots {
            let g = g_of_d(k, Side::Plus, root.d, &spec, NormSelector::H1Squared)?;
            worst = worst.max((g - root.d).abs());
        }
    }
    for e in set.entries.iter().filter(|e| !e.is_zero()) {
        let g = g_of_d(e.k, e.sign, e.d, &spec, NormSelector::H1Squared)?;
        worst = worst.max((g - e.d).abs());
    }
    let ok = set.len() == 5 && per_k == [1, 1];
    Ok(Outcome::new(
        worst,
        Comparison::Below,
        1e-9,
        format!("{} equilibria, roots per k = {per_k:?}", set.len()),
    )
    .requiring(ok))
}

fn small_energy_limit() -> anyhow::Result<Outcome> {
    let nl = Nonlinearity::cubic();
    let mut worst = 0.0f64;
    for lambda_tilde in [15.0f64, 40.0, 90.0] {
        let tau = time_map(&nl, lambda_tilde, 1e-8, Side::Plus)?;
        worst = worst.max((tau * (2.0 * lambda_tilde).sqrt() / PI - 1.0).abs());
    }
    Ok(Outcome::new(worst, Comparison::Below, 1e-3, "lambda_tilde in {15, 40, 90} at E = 1e-8".into()))
}

/// Steps of the shooting oracle.
const SHOOTING_STEPS: usize = 20_000;

fn shooting_equivalence() -> anyhow::Result<Outcome> {
    let nl = Nonlinearity::cubic();
    let mut worst = 0.0f64;
    let mut zeros_ok = true;
    for k in 1..=3 {
        for sign in [Side::Plus, Side::Minus] {
            let profile = reconstruct_profile(&nl, k, 120.0, sign, 1025)?;
            let shot = shoot(&nl, 120.0, profile.v0, SHOOTING_STEPS)?;
            zeros_ok &= shot.zero_count == k - 1;
            worst = shot
                .samples
                .iter()
                .map(|s| (s[1] - profile.value_at(s[0])).abs())
                .fold(worst, f64::max);
        }
    }
    Ok(Outcome::new(worst, Comparison::Below, 1e-6, format!("k in 1..=3, both signs, {SHOOTING_STEPS} steps"))
        .requiring(zeros_ok))
}

fn profile_norm_monotone() -> anyhow::Result<Outcome> {
    let nl = Nonlinearity::cubic();
    let lo = PI * PI;
    let samples = 50;
    let mut values = Vec::with_capacity(samples);
    for i in 1..=samples {
        let lambda_tilde = lo + (400.0 - lo) * i as f64 / samples as f64;
        values.push(profile_h1_norm_sq(&nl, 1, lambda_tilde, Side::Plus)?);
    }
    let inversions = values.windows(2).filter(|w| w[1] <= w[0]).count();
    Ok(Outcome::new(
        inversions as f64,
        Comparison::AtMost,
        0.0,
        format!("{samples} samples in (pi^2, 400], g from {:.4e} to {:.4e}", values[0], values[samples - 1]),
    ))
}

fn dipping_multiplicity() -> anyhow::Result<Outcome> {
    let spec = cubic_spec(20.0, dipping_table())?;
    let scan = solve_nonlocal_fixed_points(1, Side::Plus, &spec)?;
    let roots: Vec<String> = scan.roots.iter().map(|r| format!("{:.4}", r.d)).collect();
    Ok(Outcome::new(
        scan.roots.len() as f64,
        Comparison::AtLeast,
        3.0,
        format!("lambda 20, k = 1 roots d* = [{}]", roots.join(", ")),
    ))
}

const RANDOM_TRAJECTORIES: u64 = 50;
const RANDOM_T_END: f64 = 20.0;
const RANDOM_MAX_L2: f64 = 2.0;
const RANDOM_ENERGY_TOL: f64 = 1e-8;

struct RandomRuns {
    count: u64,
    steps: usize,
    samples: usize,
    energy_violations: usize,
    max_energy_increase: f64,
    lap_increases: usize,
}

fn random_runs(settings: &VerifySettings) -> anyhow::Result<RandomRuns> {
    use rayon::prelude::*;
    let spec = cubic_spec(50.0, affine())?;
    let options = IntegrationOptions {
        dt: settings.dt,
        t_end: RANDOM_T_END,
        energy_tol: RANDOM_ENERGY_TOL,
        ..IntegrationOptions::default()
    };
    let trajectories = (0..RANDOM_TRAJECTORIES)
        .into_par_iter()
        .map(|i| {
            let u0 = random_state(settings.modes, settings.seed.wrapping_add(i), RANDOM_MAX_L2);
            integrate(&u0, &spec, &options)
                .map(|t| (t.stats.steps, t.len(), t.stats.energy_violations, t.stats.max_energy_increase, t.lap_increases()))
        })
        .collect::<chafee::Result<Vec<_>>>()?;
    let mut runs = RandomRuns {
        count: RANDOM_TRAJECTORIES,
        steps: 0,
        samples: 0,
        energy_violations: 0,
        max_energy_increase: f64::NEG_INFINITY,
        lap_increases: 0,
    };
    for (steps, samples, violations, rise, laps) in trajectories {
        runs.steps += steps;
        runs.samples += samples;
        runs.energy_violations += violations;
        runs.max_energy_increase = runs.max_energy_increase.max(rise);
        runs.lap_increases += laps;
    }
    Ok(runs)
}

fn instability_at_zero(settings: &VerifySettings) -> anyhow::Result<Outcome> {
    let mut misses = 0usize;
    let mut detail = Vec::new();
    for lambda in [5.0, 20.0, 50.0, 95.0] {
        let spec = cubic_spec(lambda, constant())?;
        let report = linearization_report(&EquilibriumProfile::zero(lambda, 65), &spec, settings.modes)?;
        let expected = unstable_modes(lambda, 1.0, settings.modes);
        misses += report.unstable_count.abs_diff(expected);
        detail.push(format!("lambda {lambda}: {}/{expected}", report.unstable_count));
    }
    Ok(Outcome::new(misses as f64, Comparison::AtMost, 0.0, detail.join(", ")))
}

const PERTURBATIONS: u64 = 20;
const PERTURBATION_SIZE: f64 = 1e-3;
const RETURN_TOL: f64 = 1e-4;
const RETURN_T_END: f64 = 20.0;

fn stability_of_first_profiles(settings: &VerifySettings) -> anyhow::Result<Outcome> {
    use rayon::prelude::*;
    let spec = cubic_spec(20.0, affine())?;
    let set = enumerate_equilibria(&spec)?;
    let mut top = f64::NEG_INFINITY;
    let mut targets = Vec::new();
    for id in ["u1+", "u1-"] {
        let eq = set.get(id).ok_or_else(|| anyhow!("{id} missing at lambda 20"))?;
        let report = linearization_report(eq, &spec, settings.modes)?;
        top = top.max(report.eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max));
        targets.push(project_profile(eq, settings.modes));
    }
    let options = IntegrationOptions {
        dt: settings.dt,
        t_end: RETURN_T_END,
        settle_threshold: Some(1e-10),
        ..IntegrationOptions::default()
    };
    let distances = (0..PERTURBATIONS)
        .into_par_iter()
        .map(|i| {
            let target = &targets[(i % 2) as usize];
            let dir = random_state(settings.modes, settings.seed.wrapping_add(1000 + i), 1.0);
            let scale = PERTURBATION_SIZE / dir.h1_norm_sq().sqrt();
            let coeffs = target.iter().zip(&dir.coeffs).map(|(u, v)| u + scale * v).collect();
            let traj = integrate(&GalerkinState::new(coeffs), &spec, &options)?;
            Ok(traj.final_state().h1_distance(target))
        })
        .collect::<chafee::Result<Vec<f64>>>()?;
    let worst = distances.iter().copied().fold(0.0, f64::max);
    Ok(Outcome::new(
        top,
        Comparison::Below,
        -1e-6,
        format!("largest real part {top:.4e}; {PERTURBATIONS} perturbations return to within {worst:.3e} (tol {RETURN_TOL:e})"),
    )
    .requiring(worst <= RETURN_TOL))
}

fn connection_graph(settings: &VerifySettings) -> anyhow::Result<Outcome> {
    let spec = cubic_spec(50.0, affine())?;
    let set = enumerate_equilibria(&spec)?;
    let defaults = ProbeOptions::default();
    let options = ProbeOptions {
        modes: settings.modes,
        integration: IntegrationOptions { dt: settings.dt, ..defaults.integration.clone() },
        omega_tol: DEFAULT_OMEGA_TOL,
        ..defaults
    };
    let graph = probe_connections(&set, &spec, &options)?;
    let violations = check_morse_order(&graph);
    let missing = graph.missing_required_edges();
    let edges: Vec<String> = graph.edges.iter().map(|e| format!("{}->{}", e.src, e.dst)).collect();
    let mut detail = format!("{} edges [{}]", edges.len(), edges.join(", "));
    for v in &violations {
        detail.push_str(&format!("; {v}"));
    }
    for (s, d) in &missing {
        detail.push_str(&format!("; missing {s}->{d}"));
    }
    Ok(Outcome::new((violations.len() + missing.len()) as f64, Comparison::AtMost, 0.0, detail)
        .requiring(graph.required_edges().len() == 4))
}

const ENERGY_TRAJECTORIES: u64 = 5;
const ENERGY_T_END: f64 = 1.0;
const ENERGY_MAX_L2: f64 = 0.1;

fn energy_equality(settings: &VerifySettings) -> anyhow::Result<Outcome> {
    use rayon::prelude::*;
    let spec = cubic_spec(50.0, affine())?;
    let ratios = (0..ENERGY_TRAJECTORIES)
        .into_par_iter()
        .map(|i| {
            let u0 = random_state(settings.modes, settings.seed.wrapping_add(2000 + i), ENERGY_MAX_L2);
            let defect = |dt: f64| -> chafee::Result<f64> {
                let traj = integrate(&u0, &spec, &IntegrationOptions { dt, t_end: ENERGY_T_END, ..IntegrationOptions::default() })?;
                Ok(energy_equality_residual(&traj, 0, traj.len() - 1))
            };
            Ok(defect(2.0 * settings.dt)? / defect(settings.dt)?)
        })
        .collect::<chafee::Result<Vec<f64>>>()?;
    let worst = ratios.iter().map(|r| (r - 2.0).abs()).fold(0.0, f64::max);
    let listed: Vec<String> = ratios.iter().map(|r| format!("{r:.3}")).collect();
    Ok(Outcome::new(
        worst,
        Comparison::AtMost,
        0.5,
        format!("|ratio - 2| over dt {:e} vs {:e}, ratios [{}]", 2.0 * settings.dt, settings.dt, listed.join(", ")),
    ))
}
