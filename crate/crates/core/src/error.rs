//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Argument outside an operation's stated domain (inverted ranges, caps, k > n, ...).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A probability parameter was required to lie strictly inside (0, 1).
    #[error("parameter must lie strictly inside (0,1): {0}")]
    Boundary(String),

    /// A dyadic (finite binary fraction) parameter was required.
    #[error("parameter is not a finite binary fraction: {0}")]
    NonDyadic(String),

    /// Model-class construction rejected its inputs.
    #[error("invalid model class: {0}")]
    InvalidClass(String),

    /// An operation needs a designated true parameter and the class has none.
    #[error("model class has no designated true parameter")]
    MissingTrueIndex,

    /// Every member scored +inf for the given observation.
    #[error("all member scores are infinite for this observation")]
    AllScoresInfinite,

    /// The mixture assigns zero mass to the observation.
    #[error("mixture mass is zero for this observation")]
    ZeroMixtureMass,

    /// Malformed class-definition file.
    #[error("class file: {0}")]
    ClassFile(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
