//! Error type shared across the crate.
//!
//! Variants are grouped by how the CLI maps them to exit codes: input and
//! configuration problems (exit 2), condition-gate refusals where an
//! asymptotic formula is not licensed (exit 3), and numerical failures
//! (exit 4).

use crate::wings::Side;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Invalid argument or model parameter (rejected before any numerics).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Configuration file or CLI flag problem.
    #[error("config error: {0}")]
    Config(String),

    /// Moment generating function evaluated outside its finiteness domain.
    #[error("mgf domain violation: {0}")]
    MgfDomain(String),

    /// Option price outside the admissible open interval for inversion.
    #[error("price out of bounds: {0}")]
    PriceOutOfBounds(String),

    /// A moment condition gate failed, so the requested formula is not
    /// licensed for this model/side.
    #[error("{side:?} wing moment condition violated: {reason}")]
    ConditionViolated { side: Side, reason: String },

    /// The model does not support the requested quantity or side.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// Root bracketing failed; signals a pricing bug upstream.
    #[error("bracketing failure: {0}")]
    BracketFailure(String),

    /// Quadrature did not converge within its refinement budget.
    #[error("quadrature failure: {0}")]
    Quadrature(String),
}

impl Error {
    /// Process exit code for the CLI: 2 config/input, 3 condition gate,
    /// 4 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidInput(_)
            | Error::Config(_)
            | Error::MgfDomain(_)
            | Error::PriceOutOfBounds(_)
            | Error::Unsupported(_) => 2,
            Error::ConditionViolated { .. } => 3,
            Error::BracketFailure(_) | Error::Quadrature(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
