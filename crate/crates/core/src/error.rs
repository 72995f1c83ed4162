use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FochError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch between operands")]
    GridMismatch,

    #[error("multiplier `{label}` is not finite at xi = {xi}")]
    NonFiniteSymbol { label: String, xi: f64 },

    #[error("derivative order {0} is not supported (max 4)")]
    DerivativeOrder(usize),

    #[error("dyadic block index {j} outside [-1, {j_max}]")]
    BlockOutOfRange { j: i32, j_max: i32 },

    #[error("non-finite values at t = {time} (field scale {scale:.3e})")]
    NonFinite { time: f64, scale: f64 },

    #[error("time step {dt:.3e} exceeds the CFL bound {bound:.3e}")]
    CflViolation { dt: f64, bound: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate initial data: {0}")]
    Degenerate(String),

    #[error("resolution too coarse: {0}")]
    Resolution(String),

    #[error("singularity crossed: t = {t} >= T2 = {t2}")]
    SingularityCrossed { t: f64, t2: f64 },

    #[error("infeasible target {target}: the profile supports ratios below {bound}")]
    Infeasible { target: f64, bound: f64 },
}

pub type Result<T> = std::result::Result<T, FochError>;
