use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("malformed element: {0}")]
    MalformedElement(String),
    #[error("coordinate overflow in {0}")]
    Overflow(&'static str),
    #[error("unknown generator id {0}")]
    UnknownGenerator(usize),
    #[error("element is not a member of the subgroup")]
    NotAMember,
    #[error("invalid subgroup: {0}")]
    InvalidSubgroup(String),
    #[error("group mismatch: {0}")]
    GroupMismatch(String),
    #[error("invalid weight function: {0}")]
    InvalidWeight(String),
    #[error("geometry: {0}")]
    Geometry(String),
    #[error("Phi ordering violated: {0}")]
    Ordering(String),
    #[error("support does not generate the group: {0}")]
    Generation(String),
    #[error("component weights: {0}")]
    Weights(String),
    #[error("configuration: {0}")]
    Config(String),
    #[error("support cap exceeded: {support} entries > {max_support}; try epsPerStep >= {suggested_eps:e}")]
    CapExceeded {
        support: usize,
        max_support: usize,
        suggested_eps: f64,
    },
    #[error("sparse convolution of {left} by {right} entries exceeds the work limit of {limit} products")]
    WorkLimit { left: usize, right: usize, limit: u128 },
    #[error("ball enumeration cap exceeded: {count} > {cap}")]
    BallCap { count: u128, cap: u128 },
    #[error("reliability: {0}")]
    Reliability(String),
    #[error("fit: {0}")]
    Fit(String),
}

pub type Result<T> = std::result::Result<T, Error>;
