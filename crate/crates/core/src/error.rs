use thiserror::Error;

/// Errors produced by the library.
///
/// [`Error::Resource`] marks guard trips (materialization limits); every other
/// variant is a validation failure on the caller's input.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("weight vector is not normalized (total {0})")]
    Unnormalized(f64),

    #[error("invalid weight vector: {0}")]
    InvalidWeights(String),

    #[error("degenerate tilt: normalizing constant is zero")]
    DegenerateTilt,

    #[error("invalid cut {cut:?} for a {parties}-party state")]
    InvalidCut { cut: Vec<usize>, parties: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("not an orthogonal projection: {0}")]
    NotProjector(String),

    #[error("Kraus constraint violated: {0}")]
    KrausConstraint(String),

    #[error("not positive semidefinite (eigenvalue {0})")]
    NotPsd(f64),

    #[error("output is not conditionally pure: {0}; rewrite the protocol with to_normal_form first")]
    NotConditionallyPure(String),

    #[error("invalid protocol: {0}")]
    Protocol(String),

    #[error("resource guard exceeded: {0}")]
    Resource(String),
}

impl Error {
    pub fn is_resource(&self) -> bool {
        matches!(self, Error::Resource(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
