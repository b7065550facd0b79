use thiserror::Error;

/// Failures reported by the simulation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("emitter attached to unit cell {cell}, outside [1, {cells}]")]
    AttachmentOutOfRange { cell: usize, cells: usize },
    #[error("two emitters attached to the same site (cell {cell})")]
    DuplicateAttachment { cell: usize },
    #[error("energy lies on the bath spectrum (distance {distance:e})")]
    OnSpectrum { distance: f64 },
    #[error("eigensolver did not converge (stalled at index {index})")]
    NoConvergence { index: usize },
    #[error("eigenvector matrix is singular; the matrix is defective")]
    Defective,
    #[error("generalized Brillouin zone is degenerate (J1 = ±kappa/2)")]
    DegenerateGbz,
    #[error("parameters sit on a topological transition (distance {distance:e})")]
    AtTransition { distance: f64 },
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("found {found} roots of the OBC quantization condition, expected {expected}")]
    RootCountMismatch { expected: usize, found: usize },
    #[error("no in-gap eigenstate with emitter weight above threshold")]
    NoInGapState,
    #[error("singular matrix")]
    SingularMatrix,
    #[error("i/o failure: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl Error {
    /// Stable variant name, used for CLI diagnostics.
    pub fn name(&self) -> &'static str {
        match self {
            Error::InvalidParams(_) => "InvalidParams",
            Error::AttachmentOutOfRange { .. } => "AttachmentOutOfRange",
            Error::DuplicateAttachment { .. } => "DuplicateAttachment",
            Error::OnSpectrum { .. } => "OnSpectrum",
            Error::NoConvergence { .. } => "NoConvergence",
            Error::Defective => "Defective",
            Error::DegenerateGbz => "DegenerateGbz",
            Error::AtTransition { .. } => "AtTransition",
            Error::PreconditionViolated(_) => "PreconditionViolated",
            Error::RootCountMismatch { .. } => "RootCountMismatch",
            Error::NoInGapState => "NoInGapState",
            Error::SingularMatrix => "SingularMatrix",
            Error::Io(_) => "Io",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
