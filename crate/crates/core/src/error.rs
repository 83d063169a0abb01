use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Failures raised by the numeric operations.
///
/// Each variant maps to one machine-readable category (see [`Error::category`]);
/// validation findings that are data rather than failures (for example a
/// sequence violating an ordering rule) are reported in dedicated report types
/// instead.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("index out of range: {0}")]
    OutOfRange(String),

    #[error("point outside the sector: {0}")]
    OutsideSector(String),

    #[error("gram dimension {dim} exceeds the configured cap {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("precision exhausted at {digits} digits (condition estimate {condition})")]
    PrecisionExhausted { digits: u32, condition: String },

    #[error("precision insufficient: {required} digits required, {available} available")]
    PrecisionInsufficient { required: u32, available: u32 },

    #[error("matrix is not positive definite (pivot {pivot} = {value})")]
    NotPositiveDefinite { pivot: usize, value: String },

    #[error("contour quadrature did not converge: relative change {change} under node doubling exceeds {tol}")]
    QuadratureNotConverged { change: String, tol: String },

    #[error("residual {residual} exceeds the floor {floor}")]
    ResidualFloor { residual: String, floor: String },

    #[error("growth gate failed: fitted a = {a} is not below beta - slack = {limit}")]
    GrowthGate { a: String, limit: String },
}

/// Coarse error category, used for exit codes and report status fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Category {
    Parse,
    Invalid,
    Precision,
    Cap,
    Numerical,
}

impl Error {
    pub fn category(&self) -> Category {
        match self {
            Error::Parse(_) => Category::Parse,
            Error::Invalid(_)
            | Error::OutOfRange(_)
            | Error::OutsideSector(_)
            | Error::GrowthGate { .. } => Category::Invalid,
            Error::DimensionCap { .. } => Category::Cap,
            Error::PrecisionExhausted { .. } | Error::PrecisionInsufficient { .. } => {
                Category::Precision
            }
            Error::NotPositiveDefinite { .. }
            | Error::QuadratureNotConverged { .. }
            | Error::ResidualFloor { .. } => Category::Numerical,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }
}
