use thiserror::Error;

/// Failures raised by the numerical kernel and the QFI pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix must be square with finite entries: {0}")]
    InvalidOperator(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("QR iteration did not converge within {0} iterations")]
    NoConvergence(usize),
    #[error("matrix is not Hermitian (relative residual {0:.3e})")]
    NotHermitian(f64),
    #[error("matrix is singular to working precision")]
    Singular,
    #[error("spectrum is not real (max |Im λ| = {0:.3e}); broken phase")]
    ComplexSpectrum(f64),
    #[error("eigenvector matrix is near-defective (condition {0:.3e})")]
    NearDefective(f64),
    #[error("metric is not positive definite (smallest eigenvalue {0:.3e})")]
    NotPositiveDefinite(f64),
    #[error("similarity transform did not produce a Hermitian matrix (residual {0:.3e})")]
    NotHermitianResult(f64),
    #[error("curve evaluation failed at θ = {theta}: {reason}")]
    EvalFailure { theta: f64, reason: String },
    #[error("eigenbasis tracking lost at θ = {0}")]
    TrackingLost(f64),
    #[error("extremal eigenvalues are degenerate (width {0:.3e})")]
    DegenerateExtremes(f64),
    #[error("state is not normalized (norm² = {0})")]
    NotNormalized(f64),
    #[error("θ = {0} sits at an exceptional point")]
    AtExceptionalPoint(f64),
    #[error("θ = {0} lies in the broken phase")]
    BrokenPhase(f64),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("invalid finite-difference scheme: {0}")]
    InvalidScheme(String),
    #[error("gauge `{0}` is unavailable for this system")]
    GaugeUnavailable(String),
}

pub type Result<T> = std::result::Result<T, Error>;
