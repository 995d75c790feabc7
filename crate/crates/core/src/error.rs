use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid estimator config: {0}")]
    InvalidConfig(String),

    #[error("non-finite value at time step {step}: solution blew up")]
    BlowUp { step: usize },

    #[error("tridiagonal system singular at row {row}")]
    SingularSystem { row: usize },

    #[error("noise covariance factorization failed: {0}")]
    Covariance(String),

    #[error("no usable data in the window around x0 = {x0}")]
    DegenerateWindow { x0: f64 },

    #[error("scaling integral out of regime: {0}")]
    OutOfRegime(String),

    #[error("spectral exponents rho1 = {rho1}, rho2 = {rho2} give alpha = {alpha} outside (0,1)")]
    AlphaOutOfRange { rho1: f64, rho2: f64, alpha: f64 },

    #[error("bracket [{lo}, {hi}] does not contain an interior minimum")]
    BracketNoMinimum { lo: f64, hi: f64 },

    #[error("ensemble of {n_runs} runs is too small (need at least {min})")]
    EnsembleTooSmall { n_runs: usize, min: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of the numerics themselves, as opposed to bad input.
    /// The CLI maps these to a distinct exit code.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::BlowUp { .. }
                | Error::SingularSystem { .. }
                | Error::Covariance(_)
                | Error::DegenerateWindow { .. }
                | Error::OutOfRegime(_)
                | Error::BracketNoMinimum { .. }
        )
    }
}
