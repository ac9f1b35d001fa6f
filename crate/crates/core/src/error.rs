use thiserror::Error;

/// Unified error type for the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{op} requires the {expected} regime (d = {d}, s = {s} is {actual})")]
    WrongRegime {
        op: &'static str,
        expected: &'static str,
        actual: &'static str,
        d: usize,
        s: usize,
    },

    #[error(
        "Remez exchange did not converge for gamma = {gamma}, K = {k} after {iterations} \
         iterations (last levelness ratio {ratio:.3e})"
    )]
    RemezConvergence {
        gamma: f64,
        k: usize,
        iterations: usize,
        ratio: f64,
        /// Residual profile (u, residual) of the last iteration, for diagnosis.
        profile: Vec<(f64, f64)>,
    },

    #[error("approximation is exact (delta = 0); no alternation set exists")]
    DegenerateApproximation,

    #[error("Hermite degree {k} above the supported cap {cap}")]
    UnsupportedDegree { k: usize, cap: usize },

    #[error("prior construction failed: {0}")]
    PriorConstruction(String),

    #[error("prior certification failed: {0}")]
    PriorCertification(String),

    #[error("experiment grid too small: {0}")]
    InsufficientGrid(String),

    #[error("{path}:{line}: {msg}")]
    ParseAt {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
