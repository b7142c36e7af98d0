use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid size {n}: need at least {min} nodes")]
    InvalidSize { n: usize, min: usize },

    #[error("invalid in-degree {in_degree} for {n} nodes (must be in 1..={max})")]
    InvalidDegree { n: usize, in_degree: usize, max: usize },

    #[error("graph failed validation: {}", .0.join("; "))]
    InvalidGraph(Vec<String>),

    #[error("power iteration did not converge after {iterations} iterations (last estimate {estimate})")]
    NoConvergence { iterations: usize, estimate: f64 },

    #[error("infeasible reset schedule: resolved head probability {p} is outside (0, 1]")]
    InfeasibleSchedule { p: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("hidden diagnostics (coin outcomes) are required but not present")]
    MissingHiddenData,

    #[error("node {v} cannot appear in its own conditioning set")]
    InvalidConditioning { v: usize },

    #[error("node index {index} out of range for {nodes} nodes")]
    NodeOutOfRange { index: usize, nodes: usize },

    #[error("empty distribution")]
    EmptyDistribution,

    #[error("incompatible distributions: arity {left} vs {right}")]
    IncompatibleDistributions { left: usize, right: usize },

    #[error("incompatible graphs: {left} vs {right} nodes")]
    IncompatibleGraphs { left: usize, right: usize },

    #[error("exhaustive search limited to {max} nodes, got {nodes}")]
    TooManyNodes { nodes: usize, max: usize },

    #[error("no subset of size <= {max_size} passes the threshold test for node {v}")]
    NoClosedSubset { v: usize, max_size: usize },

    #[error("bound constraint violated: {0}")]
    Constraint(String),

    #[error("invalid configuration at `{path}`: {reason}")]
    Config { path: String, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("malformed record at {path}:{line}: {reason}")]
    Malformed {
        path: PathBuf,
        line: usize,
        reason: String,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        Error::Json {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
