use serde::Serialize;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// A point where the curvature check failed, with the curvature found there.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CurvatureSample {
    pub x: f64,
    pub y: f64,
    pub curvature: f64,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error at {path}: {message}")]
    Config { path: String, message: String },

    #[error("element is not hyperbolic (|trace| = {trace})")]
    NonHyperbolic { trace: f64 },

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("capability error: {0}")]
    Capability(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("curvature is not negative enough (worst K = {}, required <= {bound})", .worst.first().map_or(f64::NAN, |s| s.curvature))]
    CurvatureSign {
        bound: f64,
        worst: Vec<CurvatureSample>,
    },

    #[error("solver did not converge after {iterations} iterations (residual {residual:e})")]
    Convergence { iterations: usize, residual: f64 },

    #[error("route discrepancy {discrepancy:e} exceeds {bound:e}")]
    Inconsistency { discrepancy: f64, bound: f64 },

    #[error("usage error: {0}")]
    Usage(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    /// Short machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Config { .. } => "config",
            Error::NonHyperbolic { .. } => "non_hyperbolic",
            Error::Numerical(_) => "numerical",
            Error::Capability(_) => "capability",
            Error::Contract(_) => "contract",
            Error::CurvatureSign { .. } => "curvature_sign",
            Error::Convergence { .. } => "convergence",
            Error::Inconsistency { .. } => "inconsistency",
            Error::Usage(_) => "usage",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }
}
