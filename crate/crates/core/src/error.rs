use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WedgeError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// A lemma's hypotheses are not met by the requested parameters.
    #[error("{lemma}: {constraint}")]
    Precondition {
        lemma: &'static str,
        constraint: String,
    },

    #[error("model construction failed: {0}")]
    Construction(String),

    #[error("walker {walker_id}: step {step} left the domain, {from:?} -> {to:?}")]
    Containment {
        walker_id: u64,
        step: u64,
        from: (f64, f64),
        to: (f64, f64),
    },

    #[error("function undefined at ({x1}, {x2}): {reason}")]
    Undefined { x1: f64, x2: f64, reason: String },

    #[error("estimation error: {0}")]
    Estimation(String),
}

pub type Result<T, E = WedgeError> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> WedgeError {
    WedgeError::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
