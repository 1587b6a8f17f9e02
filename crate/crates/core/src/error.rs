use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("validation error: {0}")]
    Validation(String),

    /// A representation or formula was asked for outside the parameter
    /// region where it is defined.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("Gamma pole at z = {0}")]
    Pole(i64),

    #[error("overflow: {0}")]
    Overflow(String),

    /// Quadrature or refinement did not reach the requested tolerance.
    #[error("accuracy error: {msg} (best estimate {best_re:+.16e}{best_im:+.16e}i, est. error {est_error:.3e})")]
    Accuracy {
        msg: String,
        best_re: f64,
        best_im: f64,
        est_error: f64,
    },

    /// The piecewise solution does not reach far enough.
    #[error("horizon error: {msg} (need U >= {required:.3})")]
    Horizon { msg: String, required: f64 },
}

impl Error {
    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// Process exit code used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation(_) => 2,
            Error::Accuracy { .. } | Error::Overflow(_) => 3,
            Error::Domain(_) | Error::Pole(_) | Error::Horizon { .. } => 4,
        }
    }
}
