use thiserror::Error;

/// Errors raised by the library.
///
/// Every variant carries enough context to be reported as a structured
/// diagnostic by the command-line front end (see [`AsepError::kind`]).
#[derive(Debug, Clone, PartialEq, Error)]
pub enum AsepError {
    #[error("invalid ASEP rates: {0}")]
    InvalidAsepParams(String),

    #[error("parameters outside the fan region: A = {a}, C = {c}, AC = {} >= 1", a * c)]
    FanRegionViolation { a: f64, c: f64 },

    #[error("invalid Askey-Wilson parameters: {0}")]
    InvalidAwParams(String),

    #[error("lattice size {n} exceeds the limit {max}")]
    SizeLimitExceeded { n: usize, max: usize },

    #[error("linear system is singular: {0}")]
    SingularSystem(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("vanishing denominator factor {factor} in recurrence coefficient n = {n}")]
    DegenerateDenominator { n: usize, factor: &'static str },

    #[error("Jacobi bands are not linear in t: residual {residual:e} at index {index}")]
    LinearityViolation { index: usize, residual: f64 },

    #[error("index {index} out of range {lo}..={hi}")]
    IndexOutOfRange { index: usize, lo: usize, hi: usize },

    #[error("parameter out of range: {0}")]
    ParameterOutOfRange(String),

    #[error("domain error: {0}")]
    DomainError(String),

    #[error("unsupported atom configuration: {0}")]
    UnsupportedAtomConfiguration(String),

    #[error("times must be nondecreasing and within (0, {bound}]")]
    NonMonotoneTimes { bound: f64 },

    #[error("quadrature failed to converge: {0}")]
    QuadratureFailure(String),

    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
}

impl AsepError {
    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            AsepError::InvalidAsepParams(_) => "InvalidAsepParams",
            AsepError::FanRegionViolation { .. } => "FanRegionViolation",
            AsepError::InvalidAwParams(_) => "InvalidAwParams",
            AsepError::SizeLimitExceeded { .. } => "SizeLimitExceeded",
            AsepError::SingularSystem(_) => "SingularSystem",
            AsepError::LengthMismatch { .. } => "LengthMismatch",
            AsepError::DegenerateDenominator { .. } => "DegenerateDenominator",
            AsepError::LinearityViolation { .. } => "LinearityViolation",
            AsepError::IndexOutOfRange { .. } => "IndexOutOfRange",
            AsepError::ParameterOutOfRange(_) => "ParameterOutOfRange",
            AsepError::DomainError(_) => "DomainError",
            AsepError::UnsupportedAtomConfiguration(_) => "UnsupportedAtomConfiguration",
            AsepError::NonMonotoneTimes { .. } => "NonMonotoneTimes",
            AsepError::QuadratureFailure(_) => "QuadratureFailure",
            AsepError::InvalidConfig(_) => "InvalidConfig",
        }
    }
}

pub type Result<T> = std::result::Result<T, AsepError>;
