use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("tensor of order {order} over {d} atoms has {entries} entries, above the cap of {cap}")]
    MemoryCap {
        order: usize,
        d: usize,
        entries: u128,
        cap: u64,
    },
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("invalid simplex point: {0}")]
    InvalidSimplexPoint(String),
    #[error("atom {atom} out of range for d = {d}")]
    AtomOutOfRange { atom: usize, d: usize },
    #[error("index list contains repeated or out-of-range entries: {0:?}")]
    RepeatedIndex(Vec<usize>),
    #[error("kernel of order {order} is not an element of H_{order}")]
    NotInHn { order: usize },
    #[error("field slice of order {order} at atom {atom} is not an element of H_{order}")]
    FieldNotReady { order: usize, atom: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("negative time {0}")]
    NegativeTime(f64),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
