use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the analytic, simulation and configuration layers.
#[derive(Debug, Error)]
pub enum Error {
    /// A scalar argument is outside its admissible range.
    #[error("{name} = {value} is outside {range}")]
    Domain {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    /// Block length / run length combination is not usable.
    #[error("invalid block shape: {0}")]
    Shape(String),

    /// Exhaustive enumeration requested over too many slots.
    #[error("enumeration over 2^{slots} sequences exceeds the 2^{limit} limit")]
    TooLarge { slots: usize, limit: usize },

    /// The interference integral does not converge.
    #[error("interference integral diverges for path-loss exponent {0} <= 2")]
    Divergent(f64),

    /// Inputs describe an event of probability zero that the caller conditions on.
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// Controllability matrix does not have full row rank.
    #[error("controllability matrix has rank {rank}, state dimension is {dim}")]
    RankDeficient { rank: usize, dim: usize },

    /// Shapes of matrices or sequences do not agree.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// Bad configuration key or value.
    #[error("config: {0}")]
    Config(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_probability(name: &'static str, value: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(Error::Domain {
            name,
            value,
            range: "[0, 1]",
        })
    }
}

pub(crate) fn check_positive(name: &'static str, value: f64) -> Result<f64> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Domain {
            name,
            value,
            range: "(0, inf)",
        })
    }
}

pub(crate) fn io_error(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Error {
    let path = path.into();
    move |source| Error::Io { path, source }
}
