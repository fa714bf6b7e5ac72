//! The five subcommands. Each writes its files under the output directory
//! and a human-readable summary to `out`.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, ensure, Context};
use chafee::dynamics::{
    classify_omega_limit, integrate, project_equilibria, project_samples, random_state, GalerkinState, OmegaLimit,
};
use chafee::equilibria::{bifurcation_diagram, enumerate_equilibria, parse_equilibria_json, EquilibriumSet};
use chafee::model::Side;
use chafee::stability::{check_morse_order, probe_connections};
use serde::Serialize;

use crate::config::{Format, RunConfig};
use crate::verify::{self, CriterionId, VerifySettings};
use crate::{pipeline, CliResult, Failure, Status, WithStatus};

pub const EQUILIBRIA_JSON: &str = "equilibria.json";
pub const EQUILIBRIA_CSV: &str = "equilibria.csv";
pub const BIFURCATION_CSV: &str = "bifurcation.csv";
pub const TRAJECTORY_CSV: &str = "trajectory.csv";
pub const STATES_JSON: &str = "states.json";
pub const CONNECTIONS_JSON: &str = "connections.json";
pub const CONNECTIONS_DOT: &str = "connections.dot";
pub const VERIFY_REPORT: &str = "verify_report.json";

/// Default amplitudes for generated initial data.
pub const DEFAULT_MODE_AMPLITUDE: f64 = 1e-3;
pub const DEFAULT_RANDOM_L2: f64 = 1.0;

fn output_dir(config: &RunConfig) -> CliResult<PathBuf> {
    let dir = config.output_dir();
    fs::create_dir_all(&dir)
        .with_context(|| format!("creating output directory {}", dir.display()))
        .solver_err()?;
    Ok(dir)
}

fn write_file(path: &Path, contents: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> CliResult<()> {
    let file = fs::File::create(path).with_context(|| format!("creating {}", path.display())).solver_err()?;
    let mut w = BufWriter::new(file);
    contents(&mut w)
        .and_then(|_| w.flush())
        .with_context(|| format!("writing {}", path.display()))
        .solver_err()
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    write_file(path, |w| w.write_all(text.as_bytes()))
}

fn say(out: &mut dyn Write, line: std::fmt::Arguments<'_>) -> CliResult<()> {
    writeln!(out, "{line}").solver_err()
}

fn require_unforced(config: &RunConfig, command: &str) -> CliResult<()> {
    if config.problem.h != 0.0 {
        return Err(Failure::new(
            Status::ConfigError,
            anyhow!("{command} needs problem.h = 0, got {}", config.problem.h),
        ));
    }
    Ok(())
}

fn sign_char(sign: Side) -> char {
    match sign {
        Side::Plus => '+',
        Side::Minus => '-',
    }
}

/// Count line closing the equilibria summary.
pub fn count_line(set: &EquilibriumSet) -> String {
    if set.len() == 1 && set.includes_zero {
        "1 equilibrium (zero)".into()
    } else {
        format!("{} equilibria", set.len())
    }
}

pub fn equilibria(config: &RunConfig, out: &mut dyn Write) -> CliResult<()> {
    require_unforced(config, "equilibria")?;
    let spec = config.spec().config_err()?;
    let set = pipeline(enumerate_equilibria(&spec))?;
    let dir = output_dir(config)?;
    write_text(&dir.join(EQUILIBRIA_JSON), &(set.to_json() + "\n"))?;
    if config.wants(Format::Csv) {
        write_file(&dir.join(EQUILIBRIA_CSV), |w| {
            writeln!(w, "id,k,sign,branch,d_star,E,sup_u")?;
            for e in &set.entries {
                writeln!(
                    w,
                    "{},{},{},{},{:.16e},{:.16e},{:.16e}",
                    e.id(),
                    e.k,
                    sign_char(e.sign),
                    e.branch,
                    e.d,
                    e.energy,
                    e.sup_u
                )?;
            }
            Ok(())
        })?;
    }
    for w in &set.warnings {
        eprintln!("warning: {w}");
    }
    say(out, format_args!("{:<8} {:>3} {:>4} {:>14} {:>14} {:>12}", "id", "k", "sign", "d*", "E", "sup|u|"))?;
    for e in &set.entries {
        say(
            out,
            format_args!(
                "{:<8} {:>3} {:>4} {:>14.6e} {:>14.6e} {:>12.6e}",
                e.id(),
                e.k,
                if e.is_zero() { ' ' } else { sign_char(e.sign) },
                e.d,
                e.energy,
                e.sup_u
            ),
        )?;
    }
    say(out, format_args!("{}", count_line(&set)))
}

pub fn bifurcation(
    config: &RunConfig,
    lambda_min: f64,
    lambda_max: f64,
    steps: usize,
    out: &mut dyn Write,
) -> CliResult<()> {
    require_unforced(config, "bifurcation")?;
    (|| {
        ensure!(steps > 0, "--steps must be at least 1 (empty lambda range)");
        ensure!(lambda_min > 0.0 && lambda_min.is_finite(), "--lambda-min must be positive, got {lambda_min}");
        ensure!(lambda_max.is_finite() && lambda_max > lambda_min, "--lambda-max must exceed --lambda-min");
        Ok(())
    })()
    .config_err()?;
    let spec = config.spec().config_err()?;
    let diagram = pipeline(bifurcation_diagram(&spec, lambda_min, lambda_max, steps))?;
    let dir = output_dir(config)?;
    write_file(&dir.join(BIFURCATION_CSV), |w| diagram.write_csv(w))?;
    for w in &diagram.warnings {
        eprintln!("warning: {w}");
    }
    let mut previous = None;
    for &lambda in &diagram.lambda_grid {
        let count = diagram.branch_count(lambda);
        if previous != Some(count) {
            say(out, format_args!("lambda = {lambda:.6}: {count} branch(es)"))?;
            previous = Some(count);
        }
    }
    say(out, format_args!("{} rows over {} lambda values", diagram.rows.len(), diagram.lambda_grid.len()))
}

/// Initial data for `simulate`.
#[derive(Debug, Clone, PartialEq)]
pub enum Initial {
    Zero,
    /// Seeded smooth random data.
    Random,
    /// `amplitude * sin(j pi x)`.
    Mode(usize),
    /// Equilibrium JSON (`.json`) or two-column `x,u` CSV.
    File(PathBuf),
}

impl FromStr for Initial {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> anyhow::Result<Self> {
        match s {
            "zero" => Ok(Initial::Zero),
            "random" => Ok(Initial::Random),
            _ => {
                if let Some(j) = s.strip_prefix("mode:") {
                    let j: usize = j.parse().with_context(|| format!("mode index in \"{s}\""))?;
                    ensure!(j >= 1, "mode index must be at least 1");
                    Ok(Initial::Mode(j))
                } else if let Some(path) = s.strip_prefix("file:") {
                    ensure!(!path.is_empty(), "file: needs a path");
                    Ok(Initial::File(PathBuf::from(path)))
                } else {
                    bail!("initial data must be zero, random, mode:J or file:PATH, got \"{s}\"")
                }
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimulateArgs {
    pub initial: Initial,
    pub amplitude: Option<f64>,
    /// Record to take from a multi-record equilibrium file.
    pub entry: usize,
}

fn read_initial_samples(path: &Path, entry: usize) -> anyhow::Result<Vec<[f64; 2]>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    if path.extension().is_some_and(|e| e == "json") {
        let mut profiles = parse_equilibria_json(&text)?;
        ensure!(entry < profiles.len(), "{} has {} record(s), --entry {entry} is out of range", path.display(), profiles.len());
        return Ok(profiles.swap_remove(entry).samples);
    }
    let mut reader = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut samples = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        ensure!(record.len() == 2, "{}: row {} needs two columns x,u", path.display(), i + 1);
        match (record[0].parse::<f64>(), record[1].parse::<f64>()) {
            (Ok(x), Ok(u)) => samples.push([x, u]),
            _ if i == 0 => continue,
            _ => bail!("{}: row {} is not numeric", path.display(), i + 1),
        }
    }
    ensure!(samples.len() >= 2, "{} needs at least two samples", path.display());
    ensure!(samples.windows(2).all(|w| w[1][0] > w[0][0]), "{}: x must increase", path.display());
    Ok(samples)
}

fn initial_state(config: &RunConfig, args: &SimulateArgs) -> anyhow::Result<GalerkinState> {
    let modes = config.solver.modes;
    if let Some(a) = args.amplitude {
        ensure!(a.is_finite() && a > 0.0, "--amplitude must be positive, got {a}");
    }
    Ok(match &args.initial {
        Initial::Zero => GalerkinState::zero(modes),
        Initial::Random => random_state(modes, config.seed, args.amplitude.unwrap_or(DEFAULT_RANDOM_L2)),
        Initial::Mode(j) => {
            ensure!(*j <= modes, "mode:{j} exceeds solver.N = {modes}");
            GalerkinState::single_mode(modes, *j, args.amplitude.unwrap_or(DEFAULT_MODE_AMPLITUDE))
        }
        Initial::File(path) => {
            let path = if path.is_relative() { std::env::current_dir()?.join(path) } else { path.clone() };
            GalerkinState::new(project_samples(&read_initial_samples(&path, args.entry)?, modes))
        }
    })
}

#[derive(Serialize)]
struct StateRecord<'a> {
    t: f64,
    coeffs: &'a [f64],
}

pub fn simulate(config: &RunConfig, args: &SimulateArgs, out: &mut dyn Write) -> CliResult<()> {
    let spec = config.spec().config_err()?;
    let u0 = initial_state(config, args).config_err()?;
    let equilibria = if spec.h() == 0.0 { Some(pipeline(enumerate_equilibria(&spec))?) } else { None };
    let options = chafee::dynamics::IntegrationOptions {
        settle_threshold: Some(config.solver.settle_threshold),
        ..config.integration()
    };
    let traj = pipeline(integrate(&u0, &spec, &options))?;
    let dir = output_dir(config)?;
    let projected = equilibria.as_ref().map(|set| project_equilibria(set, config.solver.modes));
    write_file(&dir.join(TRAJECTORY_CSV), |w| traj.write_csv(w, projected.as_deref()))?;
    if config.wants(Format::Json) {
        let states: Vec<StateRecord> = [0, traj.len() - 1]
            .iter()
            .map(|&i| StateRecord { t: traj.times[i], coeffs: &traj.states[i].coeffs })
            .collect();
        let json = serde_json::to_string_pretty(&states).solver_err()?;
        write_text(&dir.join(STATES_JSON), &(json + "\n"))?;
    }
    let stats = &traj.stats;
    say(
        out,
        format_args!(
            "{} steps ({} halved), {} energy violation(s), settled: {}",
            stats.steps, stats.rejected, stats.energy_violations, stats.settled
        ),
    )?;
    let omega = match &equilibria {
        Some(set) => classify_omega_limit(&traj, set, config.solver.omega_tol).to_string(),
        None => "unclassified (h != 0)".into(),
    };
    let n = traj.len() - 1;
    say(
        out,
        format_args!(
            "omega-limit: {omega}; final energy: {:.10e}; final lap: {} (t = {:.6})",
            traj.energies[n], traj.lap_numbers[n], traj.times[n]
        ),
    )
}

/// Omega-limit of a run, for tests and scripting.
pub fn omega_of(config: &RunConfig, args: &SimulateArgs) -> CliResult<OmegaLimit> {
    let spec = config.spec().config_err()?;
    let set = pipeline(enumerate_equilibria(&spec))?;
    let u0 = initial_state(config, args).config_err()?;
    let options = chafee::dynamics::IntegrationOptions {
        settle_threshold: Some(config.solver.settle_threshold),
        ..config.integration()
    };
    let traj = pipeline(integrate(&u0, &spec, &options))?;
    Ok(classify_omega_limit(&traj, &set, config.solver.omega_tol))
}

/// Parses `SRC:DST`.
pub fn parse_edge(s: &str) -> anyhow::Result<(String, String)> {
    let (src, dst) = s.split_once(':').ok_or_else(|| anyhow!("edge must look like SRC:DST, got \"{s}\""))?;
    ensure!(!src.is_empty() && !dst.is_empty(), "edge must look like SRC:DST, got \"{s}\"");
    Ok((src.to_string(), dst.to_string()))
}

pub fn connections(config: &RunConfig, inject: &[(String, String)], out: &mut dyn Write) -> CliResult<()> {
    require_unforced(config, "connections")?;
    let spec = config.spec().config_err()?;
    let set = pipeline(enumerate_equilibria(&spec))?;
    let mut graph = pipeline(probe_connections(&set, &spec, &config.probe_options()))?;
    for (src, dst) in inject {
        pipeline(graph.inject_edge(src, dst))?;
    }
    let dir = output_dir(config)?;
    if config.wants(Format::Json) {
        write_text(&dir.join(CONNECTIONS_JSON), &(graph.to_json() + "\n"))?;
    }
    if config.wants(Format::Dot) {
        write_text(&dir.join(CONNECTIONS_DOT), &graph.to_dot())?;
    }
    for w in &graph.warnings {
        eprintln!("warning: {w}");
    }
    for n in &graph.nodes {
        say(
            out,
            format_args!(
                "node {:<8} E = {:>14.6e}  {} ({} unstable)",
                n.id, n.energy, n.classification, n.unstable_count
            ),
        )?;
    }
    for e in &graph.edges {
        say(out, format_args!("edge {} -> {} [{:?}]", e.src, e.dst, e.provenance))?;
    }
    let violations = check_morse_order(&graph);
    let missing = graph.missing_required_edges();
    for v in &violations {
        say(out, format_args!("violation: {v}"))?;
    }
    for (src, dst) in &missing {
        say(out, format_args!("missing required edge: {src} -> {dst}"))?;
    }
    if violations.is_empty() && missing.is_empty() {
        say(out, format_args!("{} nodes, {} edges, Morse order ok", graph.nodes.len(), graph.edges.len()))
    } else {
        Err(Failure::new(
            Status::MorseViolation,
            anyhow!("{} violation(s), {} missing required edge(s)", violations.len(), missing.len()),
        ))
    }
}

pub fn verify(
    config: &RunConfig,
    only: &[CriterionId],
    report_path: Option<&Path>,
    out: &mut dyn Write,
) -> CliResult<()> {
    let settings = VerifySettings::from_config(config);
    let selected: Vec<CriterionId> = if only.is_empty() { CriterionId::ALL.to_vec() } else { only.to_vec() };
    let verifier = verify::Verifier::new(settings);
    let mut results = Vec::with_capacity(selected.len());
    for id in selected {
        let result = verifier.run(id);
        say(out, format_args!("{}", result.line()))?;
        results.push(result);
    }
    let report = verify::Report::new(results);
    let path = match report_path {
        Some(p) => p.to_path_buf(),
        None => output_dir(config)?.join(VERIFY_REPORT),
    };
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).solver_err()?;
    }
    write_text(&path, &(report.to_json() + "\n"))?;
    let failed = report.criteria.iter().filter(|c| !c.passed()).count();
    say(out, format_args!("{} of {} criteria passed", report.criteria.len() - failed, report.criteria.len()))?;
    if report.passed {
        Ok(())
    } else {
        Err(Failure::new(Status::VerifyFailed, anyhow!("{failed} criterion(s) failed")))
    }
}
