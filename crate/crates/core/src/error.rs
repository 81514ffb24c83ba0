use thiserror::Error;

use crate::problem::CaseTag;

/// Errors surfaced by analysis operations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix {name} is not symmetric: relative asymmetry {asymmetry:.3e}")]
    NotSymmetric { name: &'static str, asymmetry: f64 },

    #[error("instance dimension must be at least 1")]
    EmptyInstance,

    #[error("constraint qualification fails: constraint active with vanishing gradient")]
    MfcqViolated,

    #[error("point is not stationary: residual {residual:.6e}")]
    NotStationary { residual: f64 },

    #[error("point is infeasible: constraint value {f_value:.6e} > 0")]
    Infeasible { f_value: f64 },

    #[error("multiplier equation is inconsistent: residual {residual:.6e}")]
    MultiplierInconsistent { residual: f64 },

    #[error("negative Lagrange multiplier {lambda:.6e}: not a KKT point")]
    NegativeMultiplier { lambda: f64 },

    #[error("operation requires case {expected:?}, point classified as {actual:?}")]
    WrongCase { expected: CaseTag, actual: CaseTag },

    #[error("feasibility solve exceeded its iteration cap: verdict indeterminate")]
    Indeterminate,

    #[error("not a trust-region instance: requires A = I, b = 0, alpha < 0")]
    NotTrs,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
