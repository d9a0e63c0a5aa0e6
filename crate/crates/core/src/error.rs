use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid {what}: {reason}")]
    Invalid { what: &'static str, reason: String },

    #[error("behavior policy never takes action {action} in state {state} but the target policy does (π={target})")]
    Coverage { state: usize, action: usize, target: f64 },

    #[error("singular {learner} update at step {step}: {detail}")]
    SingularUpdate {
        learner: &'static str,
        step: usize,
        detail: String,
    },

    #[error("linear solve failed: {0}")]
    Solver(String),

    #[error("stationary distribution is not unique: {0}")]
    NotErgodic(String),

    #[error("hypothesis unmet: {0}")]
    HypothesisUnmet(String),

    #[error("unknown algorithm `{0}` (expected one of: lstd, lspe, fpkf, brm, td, tdc, gtd2, gbrm)")]
    UnknownAlgorithm(String),

    #[error("index out of range: {0}")]
    OutOfRange(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(what: &'static str, reason: impl Into<String>) -> Self {
        Error::Invalid {
            what,
            reason: reason.into(),
        }
    }
}
