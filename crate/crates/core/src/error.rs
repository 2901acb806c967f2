use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the direct-scattering pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    #[error("sample file {path}: line {line}: {msg}")]
    SampleFile {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("Gauss-Seidel did not converge on line {line} after {iterations} sweeps (update {update:.3e}); the mesh step is likely too large")]
    NoConvergence {
        line: usize,
        iterations: usize,
        update: f64,
    },

    #[error("degenerate collocation pivot {pivot:.3e} at {location}; the mesh step is likely too large")]
    DegeneratePivot { location: String, pivot: f64 },

    #[error("mesh mismatch: {0}")]
    MeshMismatch(String),

    #[error("case mismatch: field was solved for {found:?}, requested {requested:?}")]
    CaseMismatch {
        found: crate::potential::Case,
        requested: crate::potential::Case,
    },

    #[error("lambda grid: {0}")]
    LambdaGrid(String),

    #[error("spectral identification: {0}")]
    Identification(String),

    #[error("degenerate Gaussian: q0*sqrt(pi*sigma) = {value} sits on the threshold ({n} - 1/2)*pi")]
    DegenerateGaussian { value: f64, n: usize },

    #[error("pole hit: {0}")]
    Pole(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}
