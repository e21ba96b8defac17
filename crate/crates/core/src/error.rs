use thiserror::Error;

/// Errors raised while building or evaluating a persistence model.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("environment shift {sigma} km has no cached suitability column on this grid")]
    UnknownShift { sigma: f64 },

    #[error("vector length {found} does not match grid size {expected}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error(
        "power iteration did not converge after {iterations} iterations (residual {residual:e})"
    )]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("critical speed bracket [0, {c_hi}] too narrow: persistence metric at upper end is {lambda_hi}; increase the upper bound")]
    BracketTooNarrow { c_hi: f64, lambda_hi: f64 },

    #[error("persistence metric is not decreasing in c near c = {c}; bisection bracket invalid")]
    NonMonotone { c: f64 },

    #[error("operation requires {requirement}")]
    Unsupported { requirement: &'static str },

    #[error("non-finite density encountered at generation {generation}")]
    NonFinite { generation: usize },
}

impl ModelError {
    pub fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        ModelError::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = ModelError> = std::result::Result<T, E>;
