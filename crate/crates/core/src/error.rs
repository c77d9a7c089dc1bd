use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error("invalid design parameter `{field}`: {reason}")]
    InvalidDesign { field: String, reason: String },

    #[error("denominator is the zero polynomial")]
    ZeroDenominator,

    #[error("closed loop is degenerate: 1 + loop gain is identically zero")]
    DegenerateLoop,

    #[error("improper transfer function: numerator degree {num} exceeds denominator degree {den}")]
    ImproperTransferFunction { num: usize, den: usize },

    #[error("root finding failed to converge (residual {residual:e})")]
    NumericalFailure { residual: f64 },

    #[error("coupling compensation is singular: 1 + m*n = {determinant:e}")]
    SingularCoupling { determinant: f64 },

    #[error("non-physical angular frequency {omega} rad/s")]
    NonPhysicalFrequency { omega: f64 },

    #[error("operating point is not an equilibrium (residual {residual:e})")]
    NotAnEquilibrium { residual: f64 },

    #[error("operation requires {expected} mode")]
    WrongMode { expected: &'static str },

    #[error("series has not settled: tail varies by {variation:e}, limit {limit:e}")]
    NotSettled { variation: f64, limit: f64 },

    #[error("numerical blow-up at t = {t} s in `{state}`")]
    NumericalBlowup { t: f64, state: &'static str },

    #[error("initial equilibrium could not be found (residual {residual:e})")]
    UnstableEquilibrium { residual: f64 },
}

impl Error {
    pub(crate) fn param(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn design(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidDesign {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// True for errors caused by the numerics rather than by the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NumericalFailure { .. }
                | Error::NumericalBlowup { .. }
                | Error::UnstableEquilibrium { .. }
                | Error::NonPhysicalFrequency { .. }
                | Error::NotSettled { .. }
                | Error::DegenerateLoop
        )
    }
}
