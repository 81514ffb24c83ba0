//! Stationarity membership, constraint qualification, multiplier recovery and
//! case classification at a reference point.
//!
//! A point is stationary when 0 lies in the gradient of the objective plus
//! the normal cone of the constraint set: inactive points need a vanishing
//! gradient, active points need the negative gradient on the ray spanned by
//! the constraint gradient.

use crate::cone::distance_to_ray;
use crate::error::{Error, Result};
use crate::problem::{CaseInfo, CaseTag, DerivativeSnapshot};
use crate::tolerance::TolerancePolicy;

/// Full stationarity assessment of a snapshot.
#[derive(Debug, Clone)]
pub struct StationarityCheck {
    pub residual: f64,
    pub is_stationary: bool,
    pub mfcq_ok: bool,
    pub case: Option<CaseInfo>,
}

fn activity_tol(s: &DerivativeSnapshot, tol: &TolerancePolicy) -> f64 {
    tol.activity * s.activity_scale
}

/// Constraint qualification: an active constraint must have a nonzero
/// gradient.
pub fn check_mfcq(s: &DerivativeSnapshot, tol: &TolerancePolicy) -> bool {
    s.con_value < -activity_tol(s, tol) || s.grad_con.norm() > tol.check
}

/// Distance from 0 to the stationarity field at the reference point:
/// `||grad f0||` inside, distance to the ray `R+ . grad F` on the boundary,
/// `+inf` outside the feasible set.
pub fn stationarity_residual(s: &DerivativeSnapshot, tol: &TolerancePolicy) -> Result<f64> {
    if !check_mfcq(s, tol) {
        return Err(Error::MfcqViolated);
    }
    let act = activity_tol(s, tol);
    if s.con_value < -act {
        Ok(s.grad_obj.norm())
    } else if s.con_value <= act {
        Ok(distance_to_ray(&(-&s.grad_obj), &s.grad_con))
    } else {
        Ok(f64::INFINITY)
    }
}

/// Recover the unique multiplier at an active stationary point from
/// `grad f0 + lambda grad F = 0`.
pub fn lagrange_multiplier(s: &DerivativeSnapshot, tol: &TolerancePolicy) -> Result<f64> {
    let act = activity_tol(s, tol);
    if s.con_value.abs() > act {
        return Err(Error::WrongCase {
            expected: CaseTag::BoundaryPositive,
            actual: if s.con_value < 0.0 {
                CaseTag::Interior
            } else {
                CaseTag::BoundaryZero
            },
        });
    }
    let u = &s.grad_con;
    let uu = u.norm_squared();
    if uu.sqrt() <= tol.check {
        return Err(Error::MfcqViolated);
    }
    let lambda = -s.grad_obj.dot(u) / uu;
    let residual = (&s.grad_obj + u * lambda).norm();
    if residual > tol.check * (1.0 + s.grad_obj.norm()) {
        return Err(Error::MultiplierInconsistent { residual });
    }
    if lambda < -tol.lambda {
        return Err(Error::NegativeMultiplier { lambda });
    }
    Ok(if lambda.abs() <= tol.lambda { 0.0 } else { lambda })
}

/// Classify the reference point into the three regimes.
pub fn classify_case(s: &DerivativeSnapshot, tol: &TolerancePolicy) -> Result<CaseInfo> {
    let act = activity_tol(s, tol);
    if s.con_value < -act {
        let residual = s.grad_obj.norm();
        if residual > tol.check * (1.0 + s.grad_obj.norm()) {
            return Err(Error::NotStationary { residual });
        }
        return Ok(CaseInfo {
            case_tag: CaseTag::Interior,
            lambda: 0.0,
            activity_residual: s.con_value.abs(),
        });
    }
    if s.con_value > act {
        return Err(Error::Infeasible {
            f_value: s.con_value,
        });
    }
    let lambda = lagrange_multiplier(s, tol)?;
    let case_tag = if lambda > tol.lambda {
        CaseTag::BoundaryPositive
    } else {
        CaseTag::BoundaryZero
    };
    Ok(CaseInfo {
        case_tag,
        lambda,
        activity_residual: s.con_value.abs(),
    })
}

/// Run the whole battery: residual, MFCQ, and classification when the point
/// is stationary.
pub fn analyze_stationarity(
    s: &DerivativeSnapshot,
    tol: &TolerancePolicy,
) -> Result<StationarityCheck> {
    let mfcq_ok = check_mfcq(s, tol);
    if !mfcq_ok {
        return Ok(StationarityCheck {
            residual: f64::NAN,
            is_stationary: false,
            mfcq_ok,
            case: None,
        });
    }
    let residual = stationarity_residual(s, tol)?;
    let is_stationary = residual <= tol.check * (1.0 + s.grad_obj.norm());
    let case = if is_stationary {
        Some(classify_case(s, tol)?)
    } else {
        None
    };
    Ok(StationarityCheck {
        residual,
        is_stationary,
        mfcq_ok,
        case,
    })
}
