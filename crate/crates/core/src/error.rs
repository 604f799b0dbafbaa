use thiserror::Error;

use crate::grade::Grade;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse failure classes. The CLI maps them onto exit codes and the FFI
/// layer onto status codes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorClass {
    Precondition,
    Numerical,
    Io,
}

impl ErrorClass {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorClass::Precondition => 2,
            ErrorClass::Numerical => 3,
            ErrorClass::Io => 4,
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("grade {grade} is not valid for the {instance} instance")]
    UnknownGrade { grade: Grade, instance: &'static str },

    #[error("instance mismatch: {left} vs {right}")]
    InstanceMismatch { left: String, right: String },

    #[error("grade {beta} is not above h({alpha}) = {h}")]
    Ladder { alpha: Grade, beta: Grade, h: Grade },

    #[error("contraction condition violated: {quantity} = {value} (needs < {limit})")]
    Contraction {
        quantity: &'static str,
        value: f64,
        limit: f64,
    },

    #[error("constant diverges: {0}")]
    Divergence(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("uncovered arcs on the circle: {0:?}")]
    UncoveredArcs(Vec<(f64, f64)>),

    #[error("symbol is not invertible at t = {t} ({detail})")]
    Singular { t: f64, detail: String },

    #[error("no localization certificate at t = {t} after {halvings} halvings")]
    NoCertificate { t: f64, halvings: usize },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("term budget of {budget} scalar terms exhausted")]
    Budget { budget: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::UnknownGrade { .. }
            | Error::InstanceMismatch { .. }
            | Error::Ladder { .. }
            | Error::Contraction { .. }
            | Error::Divergence(_)
            | Error::Precondition(_)
            | Error::UncoveredArcs(_)
            | Error::Singular { .. }
            | Error::NoCertificate { .. }
            | Error::Unsupported(_) => ErrorClass::Precondition,
            Error::Budget { .. } | Error::Numerical(_) => ErrorClass::Numerical,
            Error::Schema(_) | Error::Io(_) | Error::Json(_) => ErrorClass::Io,
        }
    }

    /// Short machine-readable name used in reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::UnknownGrade { .. } => "unknown_grade",
            Error::InstanceMismatch { .. } => "instance_mismatch",
            Error::Ladder { .. } => "ladder",
            Error::Contraction { .. } => "contraction",
            Error::Divergence(_) => "divergence",
            Error::Precondition(_) => "precondition",
            Error::UncoveredArcs(_) => "uncovered_arcs",
            Error::Singular { .. } => "singular",
            Error::NoCertificate { .. } => "no_certificate",
            Error::Unsupported(_) => "unsupported",
            Error::Budget { .. } => "budget",
            Error::Numerical(_) => "numerical",
            Error::Schema(_) => "schema",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}
