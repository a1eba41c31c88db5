use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error("non-finite sheet value at node ({0}, {1})")]
    NonFinite(usize, usize),
    #[error("index order violated: {0}")]
    IndexOrder(String),
    #[error("arity error: {0}")]
    Arity(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("field is not a product; split is undefined")]
    NotProduct,
    #[error("input is not a cocycle: max |delta a| = {0:e}")]
    NotCocycle(f64),
    #[error("algebraic relation violated: {0}")]
    Relation(String),
    #[error("invalid parameter: {0}")]
    Param(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed header: {0}")]
    Format(String),
    #[error("format version {found} not supported (expected {expected})")]
    Version { found: u32, expected: u32 },
    #[error("corrupt payload: {0}")]
    Corrupt(String),
    #[error("rejection rate {rate:.3} exceeds {limit:.3}")]
    Rejection { rate: f64, limit: f64 },
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
