use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("system size {n} exceeds the full-basis cap {cap}; use the Dicke basis for permutation-symmetric couplings")]
    SizeCap { n: usize, cap: usize },

    #[error("beatnote resonant with mode {mode} (nu_m = {nu_m:.6e} Hz, mu = {mu:.6e} Hz)")]
    Resonance { mode: usize, nu_m: f64, mu: f64 },

    #[error("ion chain unstable: squared frequency {value:.3e} for mode {mode}")]
    UnstableChain { mode: usize, value: f64 },

    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("self-check '{0}' failed; refusing to report results")]
    SelfCheck(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }

    /// Process exit code: 2 for input-contract violations, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidInput(_)
            | Error::SizeCap { .. }
            | Error::Resonance { .. }
            | Error::UnstableChain { .. }
            | Error::Io(_)
            | Error::Json(_)
            | Error::Csv(_) => 2,
            Error::NotConverged { .. }
            | Error::Numerical(_)
            | Error::SelfCheck(_) => 3,
        }
    }
}
