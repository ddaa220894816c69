use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An input violates a documented precondition.
    #[error("invalid {field}: {reason}")]
    Validation { field: String, reason: String },

    /// A point lies outside the disk on which the truncated field is certified.
    #[error("|w| = {modulus} exceeds the certified radius {rho_max}")]
    Domain { modulus: f64, rho_max: f64 },

    /// The requested radius cannot be handled in double precision.
    #[error("numerical range exceeded: {0}")]
    NumericalRange(String),

    /// An iterative or adaptive procedure did not reach its target.
    #[error("{op} failed: {reason}")]
    Numerical {
        op: &'static str,
        reason: String,
        partial: Option<f64>,
    },
}

impl Error {
    pub(crate) fn validation(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn numerical(op: &'static str, reason: impl Into<String>) -> Self {
        Error::Numerical {
            op,
            reason: reason.into(),
            partial: None,
        }
    }

    /// True for failures caused by the inputs rather than by an algorithm.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Numerical { .. })
    }
}
