use num_complex::Complex64;
use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument is outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A series or iteration did not reach the requested tolerance.
    #[error("convergence error: {what} (n_max = {n_max}, tail bound = {tail_bound:e})")]
    Convergence {
        what: String,
        n_max: usize,
        tail_bound: f64,
    },

    /// A value does not fit in double precision.
    #[error("range error: {0}")]
    Range(String),

    /// Evaluation point within the pole-exclusion radius of a lattice point.
    #[error("pole error: argument is within the exclusion radius of lattice point {nearest}")]
    Pole { nearest: Complex64 },

    /// Jet order mismatch or unsupported order.
    #[error("shape error: {0}")]
    Shape(String),

    /// The constant term of a jet is zero (or on a branch cut) where the
    /// operation needs it not to be.
    #[error("singular jet: {0}")]
    SingularJet(String),

    /// A mathematical invariant failed numerically; indicates broken
    /// summation or a bug.
    #[error("internal consistency error: {0}")]
    InternalConsistency(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn range(msg: impl Into<String>) -> Self {
        Error::Range(msg.into())
    }
}
