use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use chafee_cli::commands::{self, Initial, SimulateArgs};
use chafee_cli::config::RunConfig;
use chafee_cli::verify::{parse_selection, CriterionId};
use chafee_cli::{CliResult, Status, WithStatus};

/// Equilibria, dynamics and connection graphs of the nonlocal Chafee-Infante
/// equation u_t - a(||u||^2) u_xx = lambda f(u) + h on (0, 1).
#[derive(Debug, Parser)]
#[command(name = "chafee", version)]
struct Cli {
    /// TOML run configuration.
    #[arg(long, short, global = true, default_value = "chafee.toml")]
    config: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Enumerate the equilibria and write equilibria.json.
    Equilibria,
    /// Sweep lambda and write bifurcation.csv.
    Bifurcation {
        #[arg(long)]
        lambda_min: f64,
        #[arg(long)]
        lambda_max: f64,
        /// Number of lambda values, both ends included.
        #[arg(long)]
        steps: usize,
    },
    /// Integrate the Galerkin system and write trajectory.csv.
    Simulate {
        /// zero | random | mode:J | file:PATH
        #[arg(long, default_value = "random")]
        initial: Initial,
        /// Amplitude of mode:J data, or the largest L2 norm of random data.
        #[arg(long)]
        amplitude: Option<f64>,
        /// Record to use from a multi-record equilibrium file.
        #[arg(long, default_value_t = 0)]
        entry: usize,
    },
    /// Probe unstable manifolds and check the connection graph.
    Connections {
        /// Add an edge SRC:DST before checking (repeatable).
        #[arg(long = "inject-edge", value_parser = commands::parse_edge)]
        inject_edge: Vec<(String, String)>,
    },
    /// Run the acceptance criteria and write a JSON report.
    Verify {
        /// Criteria to run, e.g. "1-6,9".
        #[arg(long)]
        only: Option<String>,
        /// Report path; defaults to verify_report.json in the output directory.
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

fn run(cli: &Cli) -> CliResult<()> {
    let config = RunConfig::load(&cli.config).config_err()?;
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let result = match &cli.command {
        Command::Equilibria => commands::equilibria(&config, &mut out),
        Command::Bifurcation { lambda_min, lambda_max, steps } => {
            commands::bifurcation(&config, *lambda_min, *lambda_max, *steps, &mut out)
        }
        Command::Simulate { initial, amplitude, entry } => {
            let args = SimulateArgs { initial: initial.clone(), amplitude: *amplitude, entry: *entry };
            commands::simulate(&config, &args, &mut out)
        }
        Command::Connections { inject_edge } => commands::connections(&config, inject_edge, &mut out),
        Command::Verify { only, report } => {
            let only: Vec<CriterionId> = only.as_deref().map(parse_selection).transpose().config_err()?.unwrap_or_default();
            commands::verify(&config, &only, report.as_deref(), &mut out)
        }
    };
    let _ = out.flush();
    result
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { Status::ConfigError.into() } else { Status::Ok.into() };
        }
    };
    match run(&cli) {
        Ok(()) => Status::Ok.into(),
        Err(failure) => {
            eprintln!("error: {failure}");
            failure.status.into()
        }
    }
}
