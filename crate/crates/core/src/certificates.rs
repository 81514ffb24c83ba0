//! Stability certificates: the general kernel/cone conditions on a derivative
//! snapshot, and their closed-form specializations for quadratic programs.

pub mod general;
pub mod qp;
