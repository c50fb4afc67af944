use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The infectivity law violates one of its invariants.
    #[error("invalid infectivity law: {0}")]
    InvalidLaw(String),

    /// The decay-rate bracket could not be expanded to straddle the root.
    #[error("no finite decay rate: Laplace condition diverges at rho <= {boundary}")]
    NoFiniteRoot { boundary: f64 },

    /// Grid size would not fit in memory / index range.
    #[error("grid too large: n * horizon = {0}")]
    GridOverflow(f64),

    /// A numerical invariant was violated while solving.
    #[error("invariant violated: {0}")]
    Invariant(String),

    /// Kermack integration lost mass beyond tolerance.
    #[error("mass conservation drift {drift:e} exceeds tolerance; reduce the step size")]
    MassDrift { drift: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
