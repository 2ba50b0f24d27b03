use std::path::PathBuf;

use thiserror::Error;

use crate::fem::FemFunction;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite integrand on triangle {triangle}")]
    NonFiniteInterior { triangle: usize },

    #[error("non-finite integrand on boundary edge {edge}")]
    NonFiniteBoundary { edge: usize },

    #[error("Luxemburg norm: failed to bracket the unit level within {doublings} doublings")]
    NormBracket { doublings: usize },

    #[error("zero denominator in Rayleigh quotient")]
    ZeroDenominator,

    /// Carries the best iterate reached before giving up.
    #[error("eigen solver did not converge after {iterations} iterations (residual {residual:.3e})")]
    EigenNotConverged {
        iterations: usize,
        residual: f64,
        best: Box<FemFunction>,
        lambda: f64,
    },

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("failed nontriviality: best energy {best_energy:.6e} is not negative")]
    FailedNontriviality { best_energy: f64 },

    #[error("existence gate failed: {0}")]
    GateFailed(String),

    #[error(
        "Picard iteration diverged at outer step {outer} (step norm {step_norm:.3e}); \
         try a smaller damping factor"
    )]
    Diverged { outer: usize, step_norm: f64 },

    #[error("Picard iterate left the a priori ball: norm {norm:.3e} > bound {bound:.3e}")]
    APrioriBound { norm: f64, bound: f64 },

    #[error("config error at `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error in {path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}
