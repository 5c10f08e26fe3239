use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("rectifier overflow: diagonal argument {argument:e} with coefficient magnitude {coefficient_magnitude:e}")]
    RectifierOverflow {
        argument: f64,
        coefficient_magnitude: f64,
    },

    #[error("inversion bracket failure: target {target} not bracketed within |x| <= {bound:e}")]
    InversionBracket { target: f64, bound: f64 },

    #[error("non-finite objective at sample {sample}")]
    NonFiniteObjective { sample: usize },

    #[error("degenerate ensemble: {0}")]
    DegenerateEnsemble(String),

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("integrator produced a non-finite state at t = {t}")]
    NonFiniteState { t: f64 },

    #[error("filter diverged at step {step}: {source}")]
    StepFailed {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn at_step(self, step: usize) -> Self {
        match self {
            Error::StepFailed { .. } => self,
            other => Error::StepFailed {
                step,
                source: Box::new(other),
            },
        }
    }
}
