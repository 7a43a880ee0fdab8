use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: String, found: String },

    #[error("invalid monomial: {0}")]
    InvalidMonomial(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{what} exceeds the configured cap ({value} > {cap})")]
    CapExceeded {
        what: &'static str,
        value: u128,
        cap: u128,
    },

    #[error("integer overflow while computing {0}")]
    Overflow(&'static str),

    #[error("form is not homogeneous of degree {0}")]
    NotHomogeneous(usize),

    #[error("variable {0} has no matrix assigned")]
    UnboundVariable(String),

    #[error("polynomial does not split with the selected variables as {side} factors: {detail}")]
    NotSplittable { side: &'static str, detail: String },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("linear algebra backend: {0}")]
    Linalg(#[from] ndarray_linalg::error::LinalgError),

    #[error("invalid circuit: {0}")]
    InvalidCircuit(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn mismatch(expected: impl ToString, found: impl ToString) -> Self {
        Error::DimensionMismatch {
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }
}
