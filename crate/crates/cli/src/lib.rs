//! Command-line front end for the chafee laboratory: configuration, the five
//! subcommands and the verification suite.

pub mod commands;
pub mod config;
pub mod verify;

use std::fmt;
use std::process::ExitCode;

/// Process exit status of a subcommand.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok = 0,
    VerifyFailed = 1,
    ConfigError = 2,
    SolverFailure = 3,
    MorseViolation = 4,
}

impl From<Status> for ExitCode {
    fn from(s: Status) -> Self {
        ExitCode::from(s as u8)
    }
}

/// An error paired with the exit status it maps to.
#[derive(Debug)]
pub struct Failure {
    pub status: Status,
    pub error: anyhow::Error,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.error)
    }
}

impl Failure {
    pub fn new(status: Status, error: impl Into<anyhow::Error>) -> Self {
        Self { status, error: error.into() }
    }
}

pub type CliResult<T> = Result<T, Failure>;

/// Tags a fallible result with the exit status of its failure.
pub trait WithStatus<T> {
    fn or_status(self, status: Status) -> CliResult<T>;

    fn config_err(self) -> CliResult<T>
    where
        Self: Sized,
    {
        self.or_status(Status::ConfigError)
    }

    fn solver_err(self) -> CliResult<T>
    where
        Self: Sized,
    {
        self.or_status(Status::SolverFailure)
    }
}

impl<T, E: Into<anyhow::Error>> WithStatus<T> for Result<T, E> {
    fn or_status(self, status: Status) -> CliResult<T> {
        self.map_err(|e| Failure::new(status, e))
    }
}

/// Maps a library failure: rejected inputs are configuration errors, the rest
/// are solver failures.
pub fn pipeline<T>(result: chafee::Result<T>) -> CliResult<T> {
    result.map_err(|e| {
        let status = match e {
            chafee::Error::ForcingNotZero(_) | chafee::Error::InvalidInput(_) => Status::ConfigError,
            _ => Status::SolverFailure,
        };
        Failure::new(status, e)
    })
}
