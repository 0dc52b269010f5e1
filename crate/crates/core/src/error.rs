use thiserror::Error;

/// Errors raised by the simulation and analysis library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("config error at key `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error("config error: {0}")]
    ConfigSyntax(String),

    #[error("no steady state: generation {g} with zero trapping and zero recombination")]
    NoSteadyState { g: f64 },

    #[error("relaxation rate s + 2 r x is zero; relaxation time is infinite")]
    InfiniteRelaxation,

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("undefined: {0}")]
    Undefined(String),

    #[error("format error at byte offset {offset}: {reason}")]
    Format { offset: u64, reason: String },

    #[error("inconsistent background: 1/tau_e = {rate} 1/s is below gamma_other = {gamma_other} 1/s at t = {time} s")]
    InconsistentBackground { time: f64, rate: f64, gamma_other: f64 },

    #[error("fit did not converge after {iterations} iterations (best objective {objective})")]
    NonConvergence {
        iterations: usize,
        objective: f64,
        best: Vec<f64>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(key: &str, reason: impl Into<String>) -> Self {
        Error::Config {
            key: key.to_string(),
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
