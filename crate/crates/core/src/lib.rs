//! Stability certificates and empirical verification for the stationary-point
//! set map of a parametric quadratic program with one inequality constraint.
//!
//! The library decides local Lipschitz-likeness, Robinson stability and
//! strong regularity at a reference point through kernel, cone and bordered-
//! determinant conditions, enumerates stationary sets with a trust-region
//! secular solver as ground truth, and corroborates the certified properties
//! by Monte-Carlo sampling.

pub mod certificates;
pub mod cone;
pub mod error;
pub mod jsonio;
pub mod oracle;
pub mod parallel;
pub mod problem;
pub mod report;
pub mod simplex;
pub mod stationarity;
pub mod tolerance;
pub mod verifier;

pub use error::{Error, Result};
pub use parallel::ExecMode;
pub use problem::{
    evaluate, qp_snapshot, CaseInfo, CaseTag, DerivativeSnapshot, InstanceFile, QpInstance,
};
pub use report::{RobinsonVerdict, StabilityReport, TriState, Verdict};
pub use tolerance::TolerancePolicy;
