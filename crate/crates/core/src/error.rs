use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("malformed input: {0}")]
    Malformed(String),

    #[error("elements live over different bases ({left} vs {right} points)")]
    BaseMismatch { left: usize, right: usize },

    #[error("support cap exceeded: {needed} coordinates needed, cap is {cap}")]
    SupportCap { needed: usize, cap: usize },

    #[error("resource limit reached: {0}")]
    Resource(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("type family {family} exhausted under transformation {transformation}: no member can be negated properly")]
    FamilyExhausted { family: usize, transformation: String },
}

impl Error {
    /// Errors caused by the `n^|support|` blow-up rather than by bad input.
    pub fn is_resource(&self) -> bool {
        matches!(self, Error::SupportCap { .. } | Error::Resource(_))
    }
}
