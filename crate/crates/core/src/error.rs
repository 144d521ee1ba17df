use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

/// A list of violated scenario or configuration invariants.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Violations(pub Vec<String>);

impl Violations {
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, needle: &str) -> bool {
        self.0.iter().any(|v| v.contains(needle))
    }
}

impl fmt::Display for Violations {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.join("; "))
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid scenario: {0}")]
    InvalidScenario(Violations),

    #[error("invalid user configuration: {0}")]
    InvalidUsers(String),

    #[error("type N{community}{station} is empty")]
    EmptyType { community: usize, station: usize },

    #[error("invalid allocation: {0}")]
    InvalidAllocation(String),

    #[error("infeasible projection: both groups at the station are empty")]
    Infeasible,

    #[error("rho_c = {rho} yields non-integer user counts for N = {total}; admissible values are multiples of {step}")]
    NonIntegerCounts { rho: f64, total: u32, step: f64 },

    #[error("invalid settings: {0}")]
    InvalidSettings(String),

    #[error("config error in {path}: {message}")]
    Config { path: PathBuf, message: String },

    #[error("sweep point rho_c = {rho}: {source}")]
    GridPoint {
        rho: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// True for errors caused by bad inputs rather than runtime failures.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::Io { .. } => false,
            Error::GridPoint { source, .. } => source.is_validation(),
            _ => true,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
