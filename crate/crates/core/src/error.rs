use thiserror::Error;

/// Errors produced by the sampling, estimation and bound routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("non-finite state at step {step} (t = {time}, gamma = {gamma}, dtau = {dtau})")]
    NonFiniteState {
        step: usize,
        time: f64,
        gamma: f64,
        dtau: f64,
    },

    #[error("insufficient samples: got {got}, need at least {need}")]
    InsufficientSamples { got: usize, need: usize },

    #[error("sample supports do not overlap at the histogram scale")]
    EmptyOverlap,

    #[error("quadrature tolerance {tolerance:e} not met (estimated error {estimate:e})")]
    ToleranceNotMet { tolerance: f64, estimate: f64 },

    #[error("chi-square divergence undefined: {0}")]
    DivergenceUndefined(String),

    #[error("invalid delta: {0}")]
    InvalidDelta(String),

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("training diverged at step {step} (loss = {loss})")]
    DivergenceDetected { step: usize, loss: f64 },

    #[error("missing input: {0}")]
    MissingInput(String),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    TomlDe(#[from] toml::de::Error),

    #[error(transparent)]
    TomlSer(#[from] toml::ser::Error),
}

impl Error {
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
