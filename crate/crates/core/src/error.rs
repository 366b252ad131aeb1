use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh parameters: {0}")]
    InvalidMesh(String),

    #[error("cell {cell}: interface crosses {edges} edges, at most two are supported")]
    MultipleCrossings { cell: usize, edges: usize },

    #[error("cell {cell}: no sign change to bracket on edge ({a}, {b})")]
    NoBracket { cell: usize, a: usize, b: usize },

    #[error("cell {0} is not cut by the interface")]
    NotCut(usize),

    #[error("unsupported quadrature {kind} {value}")]
    UnsupportedQuadrature { kind: &'static str, value: usize },

    #[error("point ({x}, {y}) lies outside cell {cell}")]
    PointOutsideCell { cell: usize, x: f64, y: f64 },

    #[error("control has {got} values but the interface rule has {expected} points")]
    ControlPointMismatch { expected: usize, got: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite entry produced in {0}")]
    NonFinite(&'static str),

    #[error("invalid control bounds at point {index}: lower {lower} > upper {upper}")]
    InvalidBounds { index: usize, lower: f64, upper: f64 },

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("matrix is not positive definite ({0}); the penalty constant may be too small")]
    Indefinite(String),

    #[error("solver breakdown: {0}")]
    Breakdown(String),

    #[error("solver did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("unknown example '{0}' (expected 5.1, 5.2 or 5.3)")]
    UnknownExample(String),

    #[error("config error at '{key}': {message}")]
    Config { key: String, message: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Short machine-readable tag used by the CLI error line.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidMesh(_) => "invalid_mesh",
            Error::MultipleCrossings { .. } => "multiple_crossings",
            Error::NoBracket { .. } => "no_bracket",
            Error::NotCut(_) => "not_cut",
            Error::UnsupportedQuadrature { .. } => "unsupported_quadrature",
            Error::PointOutsideCell { .. } => "point_outside_cell",
            Error::ControlPointMismatch { .. } => "control_point_mismatch",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::NonFinite(_) => "non_finite",
            Error::InvalidBounds { .. } => "invalid_bounds",
            Error::InvalidParameter { .. } => "invalid_parameter",
            Error::Indefinite(_) => "indefinite",
            Error::Breakdown(_) => "breakdown",
            Error::NotConverged { .. } => "not_converged",
            Error::UnknownExample(_) => "unknown_example",
            Error::Config { .. } => "config",
            Error::Io { .. } => "io",
        }
    }
}
