use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid drift specification: {0}")]
    InvalidDrift(String),

    #[error("invalid gap law: rate #{index} is {rate}, every rate must be positive and finite")]
    NonPositiveRate { index: usize, rate: f64 },

    #[error("stability condition violated at k = {k}: mean drift of the first {k} ranks ({mean_k}) must exceed the overall mean ({mean_n}) for N = {n}")]
    Unstable { k: usize, n: usize, mean_k: f64, mean_n: f64 },

    #[error("stationarity parameter a = {a} must exceed -2 inf mean drift = {bound}")]
    ParameterBelowBound { a: f64, bound: f64 },

    #[error("degenerate law a = 0 needs inf mean drift = 0 and positive partial sums; {reason} (checked up to rank {horizon})")]
    DegenerateRejected { reason: String, horizon: usize },

    #[error("approximant rate #{index} is {rate}, must be positive")]
    ApproximantRate { index: usize, rate: f64 },

    #[error("{0}")]
    InvalidArgument(String),

    #[error("negative gap {value} at index {index}")]
    NegativeGap { index: usize, value: f64 },

    #[error("sample #{index} is {value}, samples must be positive")]
    NonPositiveSample { index: usize, value: f64 },

    #[error("particle {particle} left the finite range after a step (position {value})")]
    PositionOverflow { particle: usize, value: f64 },

    #[error("position overflow in trajectory {trajectory} at step {step} (particle {particle} = {value}); replay with seed {seed}, stream {trajectory}")]
    Overflow {
        trajectory: u64,
        step: usize,
        particle: usize,
        value: f64,
        seed: u64,
    },

    #[error("trajectory has no recorded increments at every step; re-run with increments retained and record_every = 1")]
    MissingIncrements,

    #[error("config error{}: {message}", location.map(|l| format!(" (line {l})")).unwrap_or_default())]
    Config {
        message: String,
        location: Option<usize>,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(message: impl Into<String>, location: Option<usize>) -> Self {
        Error::Config {
            message: message.into(),
            location,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
