use thiserror::Error;

/// Errors raised by the simulation and diagnostic routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// A carry or borrow chain on a dyadic point ran past the configured cap.
    /// Happens with probability p^cap for a random point.
    #[error("carry chain exceeded the hard depth cap of {cap} bits")]
    DepthCapExceeded { cap: usize },

    #[error(
        "point budget exceeded: {expected:.4e} expected Poisson points per path against a budget \
         of {budget:.4e}; a truncation eps >= {eps_needed:.4e} fits the budget"
    )]
    PointBudgetExceeded {
        expected: f64,
        budget: f64,
        eps_needed: f64,
    },

    #[error("point of kind `{point}` does not belong to a `{system}` system")]
    PointMismatch {
        point: &'static str,
        system: &'static str,
    },

    #[error("observable `{observable}` cannot be evaluated on a `{system}` point")]
    ObservableMismatch {
        observable: String,
        system: &'static str,
    },

    /// The requested estimate would see a region the truncated sampler never visits.
    #[error("biased configuration refused: {0}")]
    BiasedConfiguration(String),

    #[error("insufficient sample size: {got} samples, at least {needed} required")]
    InsufficientSamples { got: usize, needed: usize },

    #[error("{0}")]
    Unsupported(String),

    /// Two independent computations of the same quantity disagreed.
    #[error("internal consistency check failed: {0}")]
    Inconsistent(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
