use thiserror::Error;

/// Errors raised by the model, the linear algebra layer, the engine and the oracles.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("series is not admissible: {0}")]
    NotInF(String),
    #[error("moment at index {index} is not strictly positive ({value})")]
    NonpositiveMoment { index: usize, value: f64 },
    #[error("zero order {m} exceeds pole order {n}")]
    MGreaterThanN { m: u64, n: u64 },
    #[error("series tail cannot certify the requested accuracy at |z| = {at}")]
    TailNotBounded { at: f64 },
    #[error("iteration did not converge: {0}")]
    NoConvergence(&'static str),
    #[error("matrix is not positive semidefinite (min eigenvalue {min_eig:e})")]
    NotPsd { min_eig: f64 },
    #[error("matrix is not selfadjoint (residual {residual:e})")]
    NotSelfadjoint { residual: f64 },
    #[error("size mismatch: {0}")]
    SizeMismatch(String),
    #[error("affine symbols with b != 0 are only supported for the exponential series")]
    AffineUnsupportedForPhi,
    #[error("combinatorial limit exceeded: {0}")]
    Overflow(String),
    #[error("composition operator is unbounded")]
    UnboundedOperator,
    #[error("operator on L2 of the Gaussian measure is not well defined (singular linear part)")]
    NotWellDefined,
    #[error("Monte-Carlo relative standard error {rel_se:.3e} exceeds {limit:.3e}")]
    McVarianceTooHigh { rel_se: f64, limit: f64 },
    #[error("truncation size {size} too small for {steps} steps")]
    TruncationTooSmall { size: usize, steps: usize },
    #[error("series vanishes at the origin; constants are not in the space")]
    PhiZeroAtOrigin,
    #[error("linear part is not a contraction (norm {norm})")]
    ContractionViolated { norm: f64 },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

impl Error {
    /// Stable upper-case code used in machine-readable reports.
    pub fn code(&self) -> &'static str {
        match self {
            Error::NotInF(_) => "REJECT_NOT_IN_F",
            Error::NonpositiveMoment { .. } => "REJECT_NONPOSITIVE_MOMENT",
            Error::MGreaterThanN { .. } => "REJECT_M_GT_N",
            Error::TailNotBounded { .. } => "TAIL_NOT_BOUNDED",
            Error::NoConvergence(_) => "NO_CONVERGENCE",
            Error::NotPsd { .. } => "NOT_PSD",
            Error::NotSelfadjoint { .. } => "NOT_SELFADJOINT",
            Error::SizeMismatch(_) => "SIZE_MISMATCH",
            Error::AffineUnsupportedForPhi => "AFFINE_UNSUPPORTED_FOR_PHI",
            Error::Overflow(_) => "OVERFLOW",
            Error::UnboundedOperator => "UNBOUNDED_OPERATOR",
            Error::NotWellDefined => "NOT_WELL_DEFINED",
            Error::McVarianceTooHigh { .. } => "MC_VARIANCE_TOO_HIGH",
            Error::TruncationTooSmall { .. } => "TRUNCATION_TOO_SMALL",
            Error::PhiZeroAtOrigin => "PHI_ZERO_AT_ORIGIN",
            Error::ContractionViolated { .. } => "CONTRACTION_VIOLATED",
            Error::Parse(_) => "PARSE_ERROR",
            Error::DimensionMismatch(_) => "DIMENSION_MISMATCH",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
