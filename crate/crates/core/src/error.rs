use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or invalid configuration; `path` names the offending field.
    #[error("config error at `{path}`: {msg}")]
    Config { path: String, msg: String },

    #[error("non-integrable weight: {0}")]
    NonIntegrable(String),

    #[error("quadrature: {0}")]
    Quadrature(String),

    #[error("loss of positivity: b_{index} = {value:e} <= 0 (increase precision)")]
    Positivity { index: usize, value: f64 },

    #[error("newton iteration failed after {iters} steps, |residual| = {residual:e}")]
    Newton {
        iters: usize,
        residual: f64,
        residuals: Vec<f64>,
    },

    #[error("negative density at x≈{x:.4}: the {cuts}-cut ansatz does not hold")]
    NegativeDensity { x: f64, cuts: usize },

    #[error("cut merging: b_{index} >= a_{next}", next = .index + 1)]
    CutMerging { index: usize },

    #[error("regime mismatch: {0}")]
    Regime(String),

    #[error("theta series: {0}")]
    Theta(String),

    #[error("theta divisor hit at argument {0}")]
    ThetaDivisor(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    /// Process exit code used by the command line front end.
    ///
    /// 1 numerical failure, 2 model mismatch (wrong number of cuts, wrong
    /// regime), 3 configuration error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } | Error::NonIntegrable(_) => 3,
            Error::NegativeDensity { .. } | Error::CutMerging { .. } | Error::Regime(_) => 2,
            _ => 1,
        }
    }

    pub(crate) fn config(path: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            msg: msg.into(),
        }
    }
}
