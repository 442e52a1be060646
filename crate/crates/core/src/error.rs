use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{what} index {index} out of range {lo}..={hi}")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        lo: usize,
        hi: usize,
    },

    /// A coefficient function was evaluated where one of its factors is singular
    /// (zero denominator, negative radicand, ...).
    #[error("domain error: {factor} = {value:e} is not admissible")]
    Domain { factor: &'static str, value: f64 },

    #[error("composed operator order {order} exceeds the supported maximum of 2")]
    OrderExceeded { order: usize },

    #[error("jet order {requested} exceeds the supported maximum of {max}")]
    JetOrderExceeded { requested: usize, max: usize },

    #[error("operator dimensions differ: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("matrix is not unitary: residual {residual:e} > {tol:e}")]
    NonUnitary { residual: f64, tol: f64 },

    #[error("parameter error: {0}")]
    Params(String),

    #[error("grid error: {0}")]
    Grid(String),

    #[error("non-finite state detected at step {step}")]
    NonFinite { step: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("unknown suite `{0}`")]
    UnknownSuite(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn domain(factor: &'static str, value: f64) -> Self {
        Error::Domain { factor, value }
    }
}
