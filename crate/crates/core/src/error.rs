use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("parameter {0} outside the dictionary domain")]
    Domain(f64),
    #[error("exponent p = {0} not supported here")]
    BadExponent(f64),
    #[error("shape mismatch: {0}")]
    Shape(&'static str),
    #[error("measure has no positive weight")]
    EmptyMeasure,
    #[error("negative or non-finite weight at atom {0}")]
    NegativeWeight(usize),
    #[error("grid too coarse: {0}")]
    GridTooCoarse(&'static str),
    #[error("quadrature did not converge on [{0}, {1}]")]
    Quadrature(f64, f64),
    #[error("no feasible separation found")]
    Infeasible,
    #[error("ill-conditioned system: {0}")]
    IllConditioned(&'static str),
    #[error("separation precondition violated: min distance {min} <= required {required}")]
    Separation { min: f64, required: f64 },
    #[error("precondition violated: {0}")]
    Precondition(&'static str),
    #[error("invalid argument: {0}")]
    Invalid(&'static str),
}

impl Error {
    /// True for refusals caused by unmet mathematical preconditions rather than bad input.
    pub fn is_refusal(&self) -> bool {
        matches!(
            self,
            Error::Infeasible
                | Error::IllConditioned(_)
                | Error::Separation { .. }
                | Error::Precondition(_)
        )
    }
}

pub type Result<T> = core::result::Result<T, Error>;
