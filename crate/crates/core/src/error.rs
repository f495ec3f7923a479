use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid layer spec: {0}")]
    InvalidSpec(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shape mismatch: expected {expected}, got {actual}")]
    ShapeMismatch { expected: usize, actual: usize },

    #[error("unknown pde id `{0}`")]
    UnknownPde(String),

    #[error("{what} = {value} lies outside [{lo}, {hi}]")]
    OutOfDomain {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("empty training set")]
    EmptyTrainSet,

    #[error("degenerate pull: the residual-loss gradient has zero norm")]
    DegeneratePull,

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("zero reference {0}")]
    ZeroReference(&'static str),

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("malformed {what}: {detail}")]
    Format { what: &'static str, detail: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
