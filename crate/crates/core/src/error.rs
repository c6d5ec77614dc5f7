use thiserror::Error;

/// Errors shared by every module of the kernel.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum Error {
    #[error("chart mismatch: {0}")]
    ChartMismatch(String),
    #[error("coordinate index out of range: {0}")]
    IndexOutOfRange(String),
    #[error("parity violation: {0}")]
    Parity(String),
    #[error("wrong chart provenance: {0}")]
    Provenance(String),
    #[error("degenerate form: {0}")]
    Degenerate(String),
    #[error("not a unit: {0}")]
    NonUnit(String),
    #[error("exact division failed: {0}")]
    Division(String),
    #[error("non-affine Fourier substitution: {0}")]
    FourierSubstitution(String),
    #[error("even coordinates must be circles for integration: {0}")]
    NonCompact(String),
    #[error("matrix is not antisymmetric")]
    NotAntisymmetric,
    #[error("two-form is not closed")]
    NotClosed,
    #[error("size parameter out of supported range: {0}")]
    Range(String),
    #[error("unknown suite `{0}`; available: {1}")]
    UnknownSuite(String, String),
    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
