use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or inconsistent user input (specs, scenarios, CSV, flags).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// An observation carries zero probability under both laws of a pair.
    #[error("zero-probability observation: x = {0}")]
    ZeroProbabilityObservation(f64),

    /// A sample mean sits on the boundary of the mean domain, so the
    /// natural-parameter MLE does not exist in the open parameter set.
    #[error("boundary MLE: sample mean {0} lies on the boundary of the mean domain")]
    BoundaryMle(f64),

    /// An exact lattice dynamic program would exceed its state cap.
    /// The exact routines refuse rather than silently bin states.
    #[error("state explosion: {states} reachable lattice states exceed the cap of {cap}")]
    StateExplosion { states: usize, cap: usize },

    /// `E[e^W]` is not finite, e.g. a `+inf` log-likelihood-ratio step
    /// carries positive mass under the sampling law.
    #[error("unbounded moment: infinite log-likelihood ratio with positive mass")]
    UnboundedMoment,

    /// A tabulation was queried outside the grid it was built on.
    #[error("grid overflow: {0}")]
    GridOverflow(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn invalid_input(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
