use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("massless 1D field correlator diverges")]
    Massless,

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("precision exhausted after {escalations} escalations: best estimate {estimate} (error bound {bound})")]
    PrecisionExhausted {
        escalations: u32,
        estimate: String,
        bound: String,
    },

    #[error("internal consistency check failed: {0}")]
    Inconsistency(String),

    #[error("covariance block {block} violates {property}")]
    BlockInvariant { block: &'static str, property: String },

    #[error("matrix is not positive definite ({0})")]
    NotPositiveDefinite(String),

    #[error("singular matrix ({0})")]
    Singular(String),

    #[error("Jacobi eigensolver did not converge after {0} sweeps")]
    NoConvergence(usize),

    #[error("correlator at offset n = {n}: {source}")]
    AtOffset {
        n: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("fit failed: {0}")]
    Fit(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
