use std::fmt;

use thiserror::Error;

/// One failed check in an experiment configuration.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Violation {
    pub key: String,
    pub reason: String,
}

impl Violation {
    pub fn new(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Self {
            key: key.into(),
            reason: reason.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.key, self.reason)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("divergent quantity: {0}")]
    Divergent(String),

    #[error("integrability check failed: {0}")]
    Integrability(String),

    #[error("n = {n} does not divide the fine resolution {n_fine}")]
    Divisibility { n: usize, n_fine: usize },

    #[error("function is not Hölder continuous: {0}")]
    NotHolder(String),

    #[error("simulation failed at step {step}: {reason}")]
    Simulation { step: usize, reason: String },

    #[error("replicate {replicate}: {source}")]
    Replicate {
        replicate: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("majorant vanishes at {0}")]
    MajorantVanishes(f64),

    #[error("rate fit: {0}")]
    Fit(String),

    #[error("invalid configuration ({} violation(s)): {}", .0.len(), join_violations(.0))]
    Config(Vec<Violation>),

    #[error("report: {0}")]
    Report(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
