use thiserror::Error;

/// Failures raised by the numerical pipelines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("energy level {energy} lies above the separatrix level {sup}")]
    AboveSeparatrix { energy: f64, sup: f64 },

    #[error("energy level {energy} is on the separatrix {sup}; the time map diverges")]
    Singular { energy: f64, sup: f64 },

    #[error("no equilibrium with index k={k} at lambda_tilde={lambda_tilde} (needs lambda_tilde > k^2 pi^2)")]
    NoEquilibrium { k: usize, lambda_tilde: f64 },

    #[error("multiple roots of the energy-level equation detected for k={k}, lambda_tilde={lambda_tilde}")]
    MultipleEnergyRoots { k: usize, lambda_tilde: f64 },

    #[error("shooting orbit left the potential well: |u| = {value} at x = {x}")]
    Overflow { value: f64, x: f64 },

    #[error("integration diverged at t = {time}: L2 norm {norm} exceeds bound {bound}")]
    Diverged { time: f64, norm: f64, bound: f64 },

    #[error("eigenvalue iteration did not converge within {iterations} sweeps")]
    ConvergenceFailure { iterations: usize },

    #[error("quadrature did not converge (last relative change {change:e})")]
    QuadratureNotConverged { change: f64 },

    #[error("operation requires h = 0, got h = {0}")]
    ForcingNotZero(f64),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
