use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, SeiqrError>;

#[derive(Debug, Error)]
pub enum SeiqrError {
    #[error("failed to read config {path}: {source}")]
    ConfigIo {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("failed to parse config: {0}")]
    ConfigParse(String),

    #[error("invalid value for `{field}`: {reason}")]
    Invalid { field: String, reason: String },

    #[error("linear solve did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("{compartment} fell to {value:.3e} at cell {cell}")]
    NegativeState {
        compartment: &'static str,
        cell: usize,
        value: f64,
    },

    #[error("{compartment} sup-norm {value:.6e} exceeds growth envelope {bound:.6e} at t = {t}")]
    Envelope {
        compartment: &'static str,
        t: f64,
        value: f64,
        bound: f64,
    },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("step {step}: {source}")]
    Step {
        step: usize,
        #[source]
        source: Box<SeiqrError>,
    },

    #[error("optimizer iteration {iteration}: {source}")]
    Iteration {
        iteration: usize,
        #[source]
        source: Box<SeiqrError>,
    },

    #[error("case {case_id}: {source}")]
    Case {
        case_id: u8,
        #[source]
        source: Box<SeiqrError>,
    },
}

impl SeiqrError {
    pub fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        SeiqrError::Invalid {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn at_step(self, step: usize) -> Self {
        SeiqrError::Step {
            step,
            source: Box::new(self),
        }
    }
}
