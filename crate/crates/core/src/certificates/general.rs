//! General-form certificates on a derivative snapshot: one battery of
//! kernel and cone conditions per activity regime, aggregated into a
//! structured stability report.

use nalgebra::{DMatrix, DVector};

use crate::cone::{
    cone_implication, contained_in_kernel, intersect_with_rows, kernel_basis, ConeSpec,
};
use crate::error::{Error, Result};
use crate::problem::{CaseInfo, CaseTag, DerivativeSnapshot};
use crate::report::{
    CaseSummary, ConditionVerdict, DeterminantSummary, RobinsonVerdict, StabilityReport,
    StationaritySummary, TriState, Verdict,
};
use crate::stationarity;
use crate::tolerance::TolerancePolicy;

use super::qp;

/// The matrices and cones the per-case conditions are phrased in.
///
/// The parameter-space blocks `a2`/`a2p` are `None` when the snapshot carries
/// the quadratic-program structure without materialized blocks; their kernels
/// are trivial by construction and conditions fall back to that fact.
#[derive(Debug, Clone)]
pub struct CertificateMatrices {
    /// `[hess_obj + lambda hess_con | grad_con]`, n x (n+1).
    pub a1: DMatrix<f64>,
    /// `[hess_wx_obj + lambda hess_wx_con | grad_w_con]`, d x (n+1).
    pub a2: Option<DMatrix<f64>>,
    /// `a1` with lambda = 0.
    pub a1p: DMatrix<f64>,
    /// `a2` with lambda = 0.
    pub a2p: Option<DMatrix<f64>>,
    pub delta1: ConeSpec,
    pub delta2: ConeSpec,
    pub delta3: ConeSpec,
    pub qp_structure: bool,
}

fn hstack(left: &DMatrix<f64>, col: &DVector<f64>) -> DMatrix<f64> {
    let (r, c) = left.shape();
    let mut out = DMatrix::zeros(r, c + 1);
    out.view_mut((0, 0), (r, c)).copy_from(left);
    out.view_mut((0, c), (r, 1)).copy_from(col);
    out
}

/// Embed an n-vector as the first n coordinates of an (n+1)-vector.
fn pad(v: &DVector<f64>) -> DVector<f64> {
    let mut out = DVector::zeros(v.len() + 1);
    out.rows_mut(0, v.len()).copy_from(v);
    out
}

fn row_matrix(v: &DVector<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(1, v.len(), |_, j| v[j])
}

fn last_coordinate(n: usize) -> DVector<f64> {
    let mut e = DVector::zeros(n + 1);
    e[n] = 1.0;
    e
}

/// Assemble the certificate matrices and cones for a classified snapshot.
pub fn build_matrices(s: &DerivativeSnapshot, case: &CaseInfo) -> Result<CertificateMatrices> {
    let n = s.dim();
    let lambda = case.lambda;
    if s.w_blocks.is_none() && !s.qp_structure {
        return Err(Error::InvalidConfig(
            "snapshot without qp structure must carry explicit parameter-space blocks".into(),
        ));
    }
    let a1 = hstack(&(&s.hess_obj + &s.hess_con * lambda), &s.grad_con);
    let a1p = hstack(&s.hess_obj, &s.grad_con);
    let (a2, a2p) = match &s.w_blocks {
        Some(wb) => (
            Some(hstack(
                &(&wb.hess_wx_obj + &wb.hess_wx_con * lambda),
                &wb.grad_w_con,
            )),
            Some(hstack(&wb.hess_wx_obj, &wb.grad_w_con)),
        ),
        None => (None, None),
    };
    let delta1 = ConeSpec {
        eq: DMatrix::zeros(0, n + 1),
        nonneg: vec![last_coordinate(n)],
        strict: vec![pad(&s.grad_con)],
    };
    let delta2 = ConeSpec {
        eq: DMatrix::zeros(0, n),
        nonneg: vec![],
        strict: vec![-&s.grad_con],
    };
    let delta3 = ConeSpec {
        eq: DMatrix::zeros(0, n + 1),
        nonneg: vec![pad(&s.grad_con), last_coordinate(n)],
        strict: vec![],
    };
    Ok(CertificateMatrices {
        a1,
        a2,
        a1p,
        a2p,
        delta1,
        delta2,
        delta3,
        qp_structure: s.qp_structure,
    })
}

/// Verdicts of one case battery, before aggregation.
#[derive(Debug, Clone)]
pub struct CaseVerdicts {
    pub conditions: Vec<ConditionVerdict>,
    pub robinson: RobinsonVerdict,
    pub lipschitz: TriState,
}

fn witness_of(basis: &crate::cone::SubspaceBasis) -> Option<Vec<f64>> {
    basis.vectors.first().map(|v| v.iter().copied().collect())
}

/// Interior case: trivial objective-Hessian kernel, and the kernel
/// intersection/inclusion pair with the parameter-space block.
pub fn check_interior(s: &DerivativeSnapshot, tol: &TolerancePolicy) -> Result<CaseVerdicts> {
    let kd = kernel_basis(&s.hess_obj, tol);
    let sufficient = Verdict::from_bool(kd.is_trivial());
    let (c1, c2) = match &s.w_blocks {
        Some(wb) => {
            let inter = intersect_with_rows(&s.hess_obj, &wb.hess_wx_obj, tol)?;
            let c1 = Verdict::from_bool(inter.is_trivial());
            let c2 = Verdict::from_bool(contained_in_kernel(&kd, &wb.hess_wx_obj, tol)?);
            (c1, c2)
        }
        // Trivial kernel of the parameter-space block: the intersection is
        // always trivial and inclusion means triviality of ker(hess_obj).
        None => (Verdict::Holds, sufficient),
    };
    let conditions = vec![
        ConditionVerdict::new("Thm3.1(a)", sufficient).with_witness(witness_of(&kd)),
        ConditionVerdict::new("int.C1", c1),
        ConditionVerdict::new("int.C2", c2),
    ];
    let robinson = if sufficient.holds() || (c1.holds() && c2.holds()) {
        RobinsonVerdict::Yes
    } else {
        RobinsonVerdict::Unknown
    };
    let lipschitz = if s.qp_structure {
        if sufficient.holds() {
            TriState::Yes
        } else {
            TriState::No
        }
    } else if c1.holds() && c2.holds() {
        TriState::Yes
    } else {
        TriState::Unknown
    };
    Ok(CaseVerdicts {
        conditions,
        robinson,
        lipschitz,
    })
}

/// Boundary case with positive multiplier: conditions on
/// `L = ker A1 ∩ (ker grad_con x R)`.
pub fn check_boundary_positive(
    s: &DerivativeSnapshot,
    case: &CaseInfo,
    tol: &TolerancePolicy,
) -> Result<CaseVerdicts> {
    if case.case_tag != CaseTag::BoundaryPositive {
        return Err(Error::WrongCase {
            expected: CaseTag::BoundaryPositive,
            actual: case.case_tag,
        });
    }
    let n = s.dim();
    let m = build_matrices(s, case)?;
    let extra = row_matrix(&pad(&s.grad_con));
    let l_basis = intersect_with_rows(&m.a1, &extra, tol)?;
    let sufficient = Verdict::from_bool(l_basis.is_trivial());
    let (c1, c2) = match &m.a2 {
        Some(a2) => {
            let mut stacked = DMatrix::zeros(n + 1 + a2.nrows(), n + 1);
            stacked.view_mut((0, 0), (n, n + 1)).copy_from(&m.a1);
            stacked.view_mut((n, 0), (1, n + 1)).copy_from(&extra);
            stacked
                .view_mut((n + 1, 0), a2.shape())
                .copy_from(a2);
            let c1 = Verdict::from_bool(kernel_basis(&stacked, tol).is_trivial());
            let c2 = Verdict::from_bool(contained_in_kernel(&l_basis, a2, tol)?);
            (c1, c2)
        }
        None => (Verdict::Holds, sufficient),
    };
    let conditions = vec![
        ConditionVerdict::new("Thm3.1(b)", sufficient).with_witness(witness_of(&l_basis)),
        ConditionVerdict::new("bp.C1", c1),
        ConditionVerdict::new("bp.C2", c2).with_witness(if c2.holds() {
            None
        } else {
            witness_of(&l_basis)
        }),
    ];
    let robinson = if c1.holds() && c2.holds() {
        RobinsonVerdict::Yes
    } else {
        RobinsonVerdict::Unknown
    };
    let lipschitz = if c1.holds() {
        if c2.holds() {
            TriState::Yes
        } else {
            TriState::No
        }
    } else {
        TriState::Unknown
    };
    Ok(CaseVerdicts {
        conditions,
        robinson,
        lipschitz,
    })
}

fn implication_verdict(
    premise: &ConeSpec,
    conclusion: &DMatrix<f64>,
    tol: &TolerancePolicy,
) -> (Verdict, Option<Vec<f64>>) {
    match cone_implication(premise, conclusion, tol) {
        Ok(v) => (
            Verdict::from_bool(v.holds),
            v.witness.map(|w| w.iter().copied().collect()),
        ),
        Err(Error::Indeterminate) => (Verdict::Indeterminate, None),
        // Dimension errors cannot occur for matrices we assembled ourselves.
        Err(_) => (Verdict::Indeterminate, None),
    }
}

/// Boundary case with zero multiplier: the four-condition system plus the
/// necessary condition over the closed cone.
pub fn check_boundary_zero(
    s: &DerivativeSnapshot,
    case: &CaseInfo,
    tol: &TolerancePolicy,
) -> Result<CaseVerdicts> {
    if case.case_tag != CaseTag::BoundaryZero {
        return Err(Error::WrongCase {
            expected: CaseTag::BoundaryZero,
            actual: case.case_tag,
        });
    }
    let n = s.dim();
    let m = build_matrices(s, case)?;
    let extra = row_matrix(&pad(&s.grad_con));
    let lp_basis = intersect_with_rows(&m.a1p, &extra, tol)?;

    // Conclusion maps: materialized blocks, or the identity when the qp
    // structure proves their kernels trivial (Tz = 0 iff z = 0).
    let concl_big: DMatrix<f64> = match &m.a2p {
        Some(a2p) => a2p.clone(),
        None => DMatrix::identity(n + 1, n + 1),
    };
    let concl_small: DMatrix<f64> = match &s.w_blocks {
        Some(wb) => wb.hess_wx_obj.clone(),
        None => DMatrix::identity(n, n),
    };

    let c4a = match &m.a2p {
        Some(a2p) => {
            let mut stacked = DMatrix::zeros(n + a2p.nrows(), n + 1);
            stacked.view_mut((0, 0), (n, n + 1)).copy_from(&m.a1p);
            stacked.view_mut((n, 0), a2p.shape()).copy_from(a2p);
            Verdict::from_bool(kernel_basis(&stacked, tol).is_trivial())
        }
        None => Verdict::Holds,
    };
    let c4b = Verdict::from_bool(contained_in_kernel(&lp_basis, &concl_big, tol)?);

    let premise_4c = ConeSpec {
        eq: m.a1p.clone(),
        nonneg: m.delta1.nonneg.clone(),
        strict: m.delta1.strict.clone(),
    };
    let (c4c, w4c) = implication_verdict(&premise_4c, &concl_big, tol);

    let premise_4d = ConeSpec {
        eq: s.hess_obj.clone(),
        nonneg: vec![],
        strict: m.delta2.strict.clone(),
    };
    let (c4d, w4d) = implication_verdict(&premise_4d, &concl_small, tol);

    let premise_nec = ConeSpec {
        eq: m.a1p.clone(),
        nonneg: m.delta3.nonneg.clone(),
        strict: vec![],
    };
    let (nec, wnec) = implication_verdict(&premise_nec, &concl_big, tol);

    let conditions = vec![
        ConditionVerdict::new("(4a)", c4a),
        ConditionVerdict::new("(4b)", c4b).with_witness(if c4b.holds() {
            None
        } else {
            witness_of(&lp_basis)
        }),
        ConditionVerdict::new("(4c)", c4c).with_witness(w4c),
        ConditionVerdict::new("(4d)", c4d).with_witness(w4d),
        ConditionVerdict::new("bz.NEC", nec).with_witness(wnec),
    ];
    let all_four = [c4a, c4b, c4c, c4d].iter().all(|v| v.holds());
    let robinson = if all_four {
        RobinsonVerdict::Yes
    } else {
        RobinsonVerdict::Unknown
    };
    let lipschitz = if all_four {
        TriState::Yes
    } else if nec == Verdict::Fails {
        TriState::No
    } else {
        TriState::Unknown
    };
    Ok(CaseVerdicts {
        conditions,
        robinson,
        lipschitz,
    })
}

/// Dispatch on the case, attach the quadratic-program specializations and
/// strong-regularity verdicts, and aggregate everything into a report.
pub fn theorem31_verdict(
    s: &DerivativeSnapshot,
    case: &CaseInfo,
    tol: &TolerancePolicy,
) -> Result<StabilityReport> {
    let residual = stationarity::stationarity_residual(s, tol)?;
    let mfcq_ok = stationarity::check_mfcq(s, tol);
    let mut verdicts = match case.case_tag {
        CaseTag::Interior => check_interior(s, tol)?,
        CaseTag::BoundaryPositive => check_boundary_positive(s, case, tol)?,
        CaseTag::BoundaryZero => check_boundary_zero(s, case, tol)?,
    };
    let mut conditions = vec![ConditionVerdict::new("MFCQ", Verdict::from_bool(mfcq_ok))];
    conditions.append(&mut verdicts.conditions);

    let mut determinants = DeterminantSummary::default();
    let strong_regular = match case.case_tag {
        CaseTag::Interior => {
            let (det, nonsing) = qp::interior_test(&s.hess_obj, tol);
            determinants.core = Some(det);
            conditions.push(
                ConditionVerdict::new("qp.int.det", Verdict::from_bool(nonsing))
                    .with_detail(format!("det = {det:.17e}")),
            );
            TriState::Unknown
        }
        CaseTag::BoundaryPositive => {
            let (det, nonsing) = qp::bordered_test_from_snapshot(s, case.lambda, tol);
            determinants.bordered = Some(det);
            conditions.push(
                ConditionVerdict::new("qp.bord.det", Verdict::from_bool(nonsing))
                    .with_detail(format!("det = {det:.17e}")),
            );
            let sr = qp::strong_regularity_positive(s, case.lambda, tol);
            conditions.push(ConditionVerdict::new("sr.pos", Verdict::from_bool(sr)));
            let core = &s.hess_obj + &s.hess_con * case.lambda;
            let cf = qp::critical_face_check(&core, &s.grad_con, qp::LambdaCase::Positive, false, tol)?;
            conditions.push(ConditionVerdict::new("cf.pos", Verdict::from_bool(cf)));
            if sr {
                TriState::Yes
            } else {
                TriState::No
            }
        }
        CaseTag::BoundaryZero => {
            let triple = qp::zero_lambda_sufficient_parts(&s.hess_obj, &s.grad_con, tol)?;
            determinants.bordered = Some(triple.bordered_det);
            determinants.core = Some(qp::det_and_nonsingular(&s.hess_obj, tol).0);
            conditions.push(
                ConditionVerdict::new("qp.z.a", Verdict::from_bool(triple.nonsingular_bordered))
                    .with_detail(format!("det = {:.17e}", triple.bordered_det)),
            );
            conditions.push(
                ConditionVerdict::new("qp.z.b", Verdict::from_bool(triple.ray_nonpositive.holds))
                    .with_witness(
                        triple
                            .ray_nonpositive
                            .witness
                            .map(|w| w.iter().copied().collect()),
                    ),
            );
            conditions.push(ConditionVerdict::new(
                "qp.z.c",
                Verdict::from_bool(triple.kernel_orthogonal),
            ));
            let nec = qp::zero_lambda_necessary_parts(&s.hess_obj, &s.grad_con, tol)?;
            conditions.push(
                ConditionVerdict::new("qp.z.nec", Verdict::from_bool(nec.holds))
                    .with_witness(nec.witness.map(|w| w.iter().copied().collect())),
            );
            let sr = qp::strong_regularity_zero(s, tol);
            conditions.push(ConditionVerdict::new("sr.zero", Verdict::from_bool(sr)));
            let cf =
                qp::critical_face_check(&s.hess_obj, &s.grad_con, qp::LambdaCase::Zero, false, tol)?;
            conditions.push(ConditionVerdict::new("cf.zero", Verdict::from_bool(cf)));
            if sr {
                TriState::Yes
            } else {
                TriState::No
            }
        }
    };

    Ok(StabilityReport {
        case: CaseSummary::from(case),
        stationarity: StationaritySummary { residual, mfcq_ok },
        conditions,
        lipschitz_like: verdicts.lipschitz,
        robinson_stable: verdicts.robinson,
        strong_regular,
        determinants,
    })
}
