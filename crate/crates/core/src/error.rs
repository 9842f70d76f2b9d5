use crate::expr::{EvalError, ParseError};

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse failure class, used by the command-line front end to pick an exit
/// code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Malformed input: spec files, trajectories, expressions.
    Input,
    /// A numerical precondition or check failed.
    Numeric,
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{field}: {source}")]
    Parse {
        field: String,
        #[source]
        source: ParseError,
    },
    #[error("invalid spec: {0}")]
    InvalidSpec(String),
    #[error("invalid trajectory: {0}")]
    InvalidTrajectory(String),
    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("metric not positive definite at {point:?}")]
    NotPositiveDefinite { point: Vec<f64> },
    #[error("metric is singular at {point:?}")]
    SingularMetric { point: Vec<f64> },
    #[error("metric is not symmetric at {point:?} (deviation {deviation:.3e})")]
    AsymmetricMetric { point: Vec<f64>, deviation: f64 },
    #[error("input frame is rank deficient at {point:?}")]
    RankDeficientFrame { point: Vec<f64> },
    #[error("Gram matrix of the complement frame is singular at {point:?}")]
    SingularGram { point: Vec<f64> },
    #[error(
        "input frame Gram matrix ill conditioned at t={time} (condition number {condition:.3e})"
    )]
    IllConditionedFrame { time: f64, condition: f64 },
    #[error("trajectory violates its dynamics: residual {residual:.3e} at t={time}")]
    DynamicsMismatch { residual: f64, time: f64 },
    #[error("degenerate grid: {0}")]
    DegenerateGrid(String),
    #[error("grid too coarse: {nodes} nodes, need at least 3")]
    GridTooCoarse { nodes: usize },
    #[error("momentum transfer rejected at t1={t1}: pairing {worst_pairing:.3e} with a kinematic perturbation")]
    TransferRejected { t1: f64, worst_pairing: f64 },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Parse { .. }
            | Error::InvalidSpec(_)
            | Error::InvalidTrajectory(_)
            | Error::DimensionMismatch { .. }
            | Error::DegenerateGrid(_)
            | Error::Io { .. }
            | Error::Csv(_)
            | Error::Json(_) => ErrorClass::Input,
            _ => ErrorClass::Numeric,
        }
    }

    pub(crate) fn parse(field: impl Into<String>, source: ParseError) -> Error {
        Error::Parse {
            field: field.into(),
            source,
        }
    }
}
