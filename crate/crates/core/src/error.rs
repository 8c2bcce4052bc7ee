use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("image has zero size")]
    EmptyImage,

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// Normal estimation needs at least two contact points.
    #[error("need at least 2 points to estimate a surface, got {0}")]
    NoSurface(usize),

    /// Pose-cell activity vanished; global inhibition is too strong for the
    /// current packet.
    #[error("pose-cell activity is all zero")]
    DegenerateActivity,

    #[error("pose ({x:.3}, {y:.3}) is outside the arena")]
    OutsideArena { x: f64, y: f64 },

    #[error("trajectory script ended at cycle {length}, requested cycle {cycle}")]
    ScriptEnded { cycle: usize, length: usize },

    #[error("sensor log line {line}: {message}")]
    LogParse { line: usize, message: String },

    #[error("need at least 2 experiences for trajectory alignment, got {0}")]
    TooFewPoses(usize),

    #[error("no ground truth for cycle {0}")]
    MissingGroundTruth(usize),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("runs differ in {0}; comparisons need identical seeds and scripts")]
    Mismatch(&'static str),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cycle {cycle}: {source}")]
    Pipeline {
        cycle: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad user input rather than a failure while
    /// the pipeline was running.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::Config(_) | Error::InvalidParameter { .. } | Error::Mismatch(_)
        )
    }
}
