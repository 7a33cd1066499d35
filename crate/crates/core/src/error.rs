use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("split ratio must lie strictly between 0 and 1, got {0}")]
    InvalidRatio(f64),
    #[error("dropout rate must lie in [0, 1), got {0}")]
    InvalidDropout(f64),
    #[error("interaction data is empty")]
    Empty,
    #[error("invalid layer dimensions: {0}")]
    InvalidLayerDims(String),
    #[error("{what}: expected length {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("{what} index {index} out of range (bound {bound})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        bound: usize,
    },
    #[error("non-finite gradient in parameter block `{block}`")]
    NonFiniteGradient { block: String },
    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },
    #[error("non-finite score for item {item}")]
    NonFiniteScore { item: usize },
    #[error("user {user} has no unobserved items")]
    NoNegatives { user: usize },
    #[error("item {item} is not an observed positive of user {user}")]
    NotObserved { user: usize, item: usize },
    #[error("item {item} is already observed for user {user}")]
    AlreadyObserved { user: usize, item: usize },
    #[error("relevant item set is empty")]
    EmptyRelevant,
    #[error("operation requires a {expected} model")]
    WrongVariant { expected: &'static str },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
