//! TOML run configuration. Unknown keys are rejected by name.

use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use chafee::dynamics::{IntegrationOptions, DEFAULT_MODES, DEFAULT_OMEGA_TOL, DEFAULT_SETTLE_THRESHOLD};
use chafee::model::{DiffusionCoefficient, Nonlinearity, ProblemSpec, DEFAULT_GRID_POINTS};
use chafee::stability::ProbeOptions;
use serde::Deserialize;

/// Overrides `outputs.directory`.
pub const OUTPUT_DIR_ENV: &str = "CHAFEE_OUTPUT_DIR";

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub outputs: OutputConfig,
    /// Seed for random initial data.
    #[serde(default)]
    pub seed: u64,
    /// Directory of the config file; relative paths resolve against it.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub lambda: f64,
    #[serde(default)]
    pub nonlinearity: NonlinearityConfig,
    #[serde(default)]
    pub diffusion: DiffusionConfig,
    #[serde(default)]
    pub h: f64,
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
}

fn default_grid_points() -> usize {
    DEFAULT_GRID_POINTS
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonlinearityConfig {
    /// `cubic` or `custom`.
    pub name: String,
    /// Polynomial coefficients `[c0, c1, ...]` of a `custom` reaction term.
    #[serde(default)]
    pub coeffs: Vec<f64>,
}

impl Default for NonlinearityConfig {
    fn default() -> Self {
        Self { name: "cubic".into(), coeffs: Vec::new() }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiffusionConfig {
    /// `constant`, `affine` or `table`.
    pub name: String,
    /// `[a0]` for `constant`, `[a0, slope]` for `affine`.
    #[serde(default)]
    pub params: Vec<f64>,
    /// Inline `(s, a(s))` points for `table`.
    #[serde(default)]
    pub points: Vec<[f64; 2]>,
    /// Two-column CSV of `(s, a(s))` for `table`.
    #[serde(default)]
    pub file: Option<PathBuf>,
}

impl Default for DiffusionConfig {
    fn default() -> Self {
        Self { name: "constant".into(), params: vec![1.0], points: Vec::new(), file: None }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    /// Galerkin modes.
    #[serde(rename = "N")]
    pub modes: usize,
    pub dt: f64,
    pub t_end: f64,
    pub sample_interval: f64,
    /// Grid for lap numbers.
    pub grid_points: usize,
    pub deadband: Option<f64>,
    pub omega_tol: f64,
    pub settle_threshold: f64,
    pub epsilon: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let d = IntegrationOptions::default();
        Self {
            modes: DEFAULT_MODES,
            dt: d.dt,
            t_end: d.t_end,
            sample_interval: d.sample_interval,
            grid_points: d.lap_grid_points,
            deadband: None,
            omega_tol: DEFAULT_OMEGA_TOL,
            settle_threshold: DEFAULT_SETTLE_THRESHOLD,
            epsilon: ProbeOptions::default().epsilon,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Dot,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub directory: PathBuf,
    pub formats: Vec<Format>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { directory: PathBuf::from("out"), formats: vec![Format::Csv, Format::Json, Format::Dot] }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut config = Self::parse(&text).with_context(|| format!("in {}", path.display()))?;
        config.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(config)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| anyhow::anyhow!("{}", e.message().trim()))?;
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<()> {
        let p = &self.problem;
        ensure!(p.lambda > 0.0 && p.lambda.is_finite(), "problem.lambda must be positive, got {}", p.lambda);
        ensure!(p.h.is_finite(), "problem.h must be finite");
        ensure!(p.grid_points >= 3, "problem.grid_points must be at least 3, got {}", p.grid_points);
        let s = &self.solver;
        ensure!(s.modes >= 1, "solver.N must be at least 1");
        ensure!(s.dt > 0.0 && s.dt.is_finite(), "solver.dt must be positive, got {}", s.dt);
        ensure!(s.t_end > 0.0 && s.t_end.is_finite(), "solver.t_end must be positive, got {}", s.t_end);
        ensure!(s.sample_interval > 0.0, "solver.sample_interval must be positive, got {}", s.sample_interval);
        ensure!(s.grid_points >= 257, "solver.grid_points must be at least 257, got {}", s.grid_points);
        if let Some(d) = s.deadband {
            ensure!(d >= 0.0 && d.is_finite(), "solver.deadband must be non-negative, got {d}");
        }
        ensure!(s.omega_tol > 0.0, "solver.omega_tol must be positive, got {}", s.omega_tol);
        ensure!(s.settle_threshold > 0.0, "solver.settle_threshold must be positive");
        ensure!(s.epsilon > 0.0 && s.epsilon.is_finite(), "solver.epsilon must be positive, got {}", s.epsilon);
        ensure!(!self.outputs.formats.is_empty(), "outputs.formats must not be empty");
        Ok(())
    }

    pub fn nonlinearity(&self) -> Result<Nonlinearity> {
        let n = &self.problem.nonlinearity;
        match n.name.as_str() {
            "cubic" => {
                ensure!(n.coeffs.is_empty(), "nonlinearity.coeffs only applies to name = \"custom\"");
                Ok(Nonlinearity::cubic())
            }
            "custom" => Ok(Nonlinearity::polynomial("custom", &n.coeffs)?),
            other => bail!("nonlinearity.name must be \"cubic\" or \"custom\", got \"{other}\""),
        }
    }

    pub fn diffusion(&self) -> Result<DiffusionCoefficient> {
        let d = &self.problem.diffusion;
        let params = |n: usize| -> Result<&[f64]> {
            ensure!(d.params.len() == n, "diffusion.params for \"{}\" needs {n} value(s), got {}", d.name, d.params.len());
            Ok(&d.params)
        };
        match d.name.as_str() {
            "constant" => Ok(DiffusionCoefficient::constant(params(1)?[0])?),
            "affine" => {
                let p = params(2)?;
                Ok(DiffusionCoefficient::affine(p[0], p[1])?)
            }
            "table" => {
                let points: Vec<(f64, f64)> = match (&d.file, d.points.is_empty()) {
                    (Some(file), true) => read_table(&self.base_dir.join(file))?,
                    (None, false) => d.points.iter().map(|p| (p[0], p[1])).collect(),
                    _ => bail!("diffusion \"table\" needs exactly one of diffusion.file or diffusion.points"),
                };
                Ok(DiffusionCoefficient::table(&points)?)
            }
            other => bail!("diffusion.name must be \"constant\", \"affine\" or \"table\", got \"{other}\""),
        }
    }

    pub fn spec(&self) -> Result<ProblemSpec> {
        self.spec_at(self.problem.lambda)
    }

    pub fn spec_at(&self, lambda: f64) -> Result<ProblemSpec> {
        Ok(ProblemSpec::new(lambda, self.nonlinearity()?, self.diffusion()?)?
            .with_h(self.problem.h)?
            .with_grid_points(self.problem.grid_points)?)
    }

    pub fn integration(&self) -> IntegrationOptions {
        let s = &self.solver;
        IntegrationOptions {
            dt: s.dt,
            t_end: s.t_end,
            sample_interval: s.sample_interval,
            lap_grid_points: s.grid_points,
            deadband: s.deadband,
            ..IntegrationOptions::default()
        }
    }

    pub fn probe_options(&self) -> ProbeOptions {
        ProbeOptions {
            epsilon: self.solver.epsilon,
            modes: self.solver.modes,
            integration: IntegrationOptions {
                settle_threshold: Some(self.solver.settle_threshold),
                ..self.integration()
            },
            omega_tol: self.solver.omega_tol,
        }
    }

    pub fn wants(&self, format: Format) -> bool {
        self.outputs.formats.contains(&format)
    }

    /// Output directory, with the environment override applied.
    pub fn output_dir(&self) -> PathBuf {
        match std::env::var_os(OUTPUT_DIR_ENV) {
            Some(dir) if !dir.is_empty() => PathBuf::from(dir),
            _ => self.base_dir.join(&self.outputs.directory),
        }
    }
}

/// Reads `(s, a(s))` rows; a non-numeric first row is taken as a header.
fn read_table(path: &Path) -> Result<Vec<(f64, f64)>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("reading diffusion table {}", path.display()))?;
    let mut points = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        ensure!(record.len() == 2, "{}: row {} needs two columns", path.display(), i + 1);
        match (record[0].parse::<f64>(), record[1].parse::<f64>()) {
            (Ok(s), Ok(a)) => points.push((s, a)),
            _ if i == 0 => continue,
            _ => bail!("{}: row {} is not numeric", path.display(), i + 1),
        }
    }
    Ok(points)
}
