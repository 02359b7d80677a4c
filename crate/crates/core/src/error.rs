use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("map is not invertible: {0}")]
    NotInvertible(String),

    #[error("no unique inverse branch for point (fiber preimages in disk: {candidates})")]
    BranchAmbiguous { candidates: usize },

    #[error("orbit left the chart domain at iterate {iterate}")]
    DomainEscape { iterate: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("precondition violated: {0}")]
    PreconditionViolated(String),

    #[error("insufficient data: need at least {needed}, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("points are not on the same stable fiber (base gap {gap:e})")]
    NotSameFiber { gap: f64 },

    #[error("point does not belong to the {expected} domain")]
    WrongDomain { expected: &'static str },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
