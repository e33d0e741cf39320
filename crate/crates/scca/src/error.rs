//! Error types shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// The joint covariance (or another matrix required to be SPD) failed Cholesky.
    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    /// A model-class constraint was violated; the message names the violated item.
    #[error("model class violation: {0}")]
    ClassViolation(String),

    #[error("invalid sparsity: {0}")]
    InvalidSparsity(String),

    #[error("Cholesky factorization failed")]
    CholeskyFailure,

    /// A symmetric square root does not exist (eigenvalue below -1e-10).
    #[error("matrix square root failed: eigenvalue {0} is negative")]
    SqrtFailure(f64),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("sample covariance is singular")]
    SingularCovariance,

    /// A precision provider needed the model truth but none was supplied.
    #[error("precision provider requires the model truth")]
    MissingTruth,

    #[error("invalid s for sparsity-aware cut: {0}")]
    InvalidS(String),

    #[error("SVD failed to converge")]
    SvdFailure,

    /// The true support is empty or fills the ambient space.
    #[error("degenerate truth support: {0}")]
    DegenerateTruth(String),

    #[error("precondition violated: {0}")]
    PreconditionViolated(String),

    #[error("vector is not unit norm (|norm - 1| = {0:e})")]
    NotUnitNorm(f64),

    #[error("packing family too small: need at least 3, got {0}")]
    FamilyTooSmall(usize),

    #[error("instance too large for exact evaluation: {0}")]
    TooLarge(String),

    #[error("overflow in log-space accumulation")]
    Overflow,

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
