//! Closed-form quadratic-program tests: bordered determinants, the zero-
//! multiplier sufficient/necessary conditions, strong regularity of the KKT
//! system, and the critical-face enumeration.

use nalgebra::{DMatrix, DVector};

use crate::cone::{contained_in_kernel, cone_implication, kernel_basis, nonpositive_on_cone,
    ConeSpec, ImplicationVerdict};
use crate::error::{Error, Result};
use crate::problem::{evaluate, DerivativeSnapshot, QpInstance};
use crate::tolerance::TolerancePolicy;

/// The (n+1) x (n+1) stability matrix `[[core, border], [border', 0]]`.
#[derive(Debug, Clone)]
pub struct BorderedMatrix {
    pub core: DMatrix<f64>,
    pub border: DVector<f64>,
    pub assembled: DMatrix<f64>,
}

impl BorderedMatrix {
    pub fn new(core: DMatrix<f64>, border: DVector<f64>) -> Self {
        let n = border.len();
        assert_eq!(core.nrows(), n);
        assert_eq!(core.ncols(), n);
        let mut assembled = DMatrix::zeros(n + 1, n + 1);
        assembled.view_mut((0, 0), (n, n)).copy_from(&core);
        assembled.view_mut((0, n), (n, 1)).copy_from(&border);
        assembled
            .view_mut((n, 0), (1, n))
            .copy_from(&border.transpose());
        BorderedMatrix {
            core,
            border,
            assembled,
        }
    }

    /// Variant with the negated bottom row; same nonsingularity.
    pub fn negated_row(&self) -> DMatrix<f64> {
        let n = self.border.len();
        let mut m = self.assembled.clone();
        for j in 0..=n {
            m[(n, j)] = -m[(n, j)];
        }
        m
    }
}

/// Determinant (pivoted LU) and nonsingularity (`sigma_min > tau`) of a
/// square matrix. Nonsingularity is decided spectrally, never by the
/// determinant's magnitude.
pub fn det_and_nonsingular(m: &DMatrix<f64>, tol: &TolerancePolicy) -> (f64, bool) {
    let det = m.clone().lu().determinant();
    let svd = m.clone().svd(false, false);
    let smax = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
    let smin = svd
        .singular_values
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    let tau = tol.rank_threshold(m.nrows(), m.ncols(), smax);
    (det, smin > tau)
}

/// Interior test: the map is stable iff the objective Hessian is nonsingular.
pub fn interior_test(core: &DMatrix<f64>, tol: &TolerancePolicy) -> (f64, bool) {
    det_and_nonsingular(core, tol)
}

fn active_border(instance: &QpInstance, x_bar: &DVector<f64>) -> Result<DVector<f64>> {
    instance.check_point(x_bar)?;
    Ok(evaluate(instance, x_bar)?.grad_con)
}

/// Bordered determinant test for an active point with positive multiplier.
pub fn bordered_test_positive_lambda(
    instance: &QpInstance,
    x_bar: &DVector<f64>,
    lambda: f64,
    tol: &TolerancePolicy,
) -> Result<(f64, bool)> {
    if lambda <= 0.0 {
        return Err(Error::InvalidConfig(
            "bordered test requires a positive multiplier".into(),
        ));
    }
    let border = active_border(instance, x_bar)?;
    let core = &instance.obj_quad + &instance.con_quad * lambda;
    let bm = BorderedMatrix::new(core, border);
    Ok(det_and_nonsingular(&bm.assembled, tol))
}

/// Same test directly from a snapshot.
pub fn bordered_test_from_snapshot(
    s: &DerivativeSnapshot,
    lambda: f64,
    tol: &TolerancePolicy,
) -> (f64, bool) {
    let core = &s.hess_obj + &s.hess_con * lambda;
    let bm = BorderedMatrix::new(core, s.grad_con.clone());
    det_and_nonsingular(&bm.assembled, tol)
}

/// The three zero-multiplier sufficient conditions.
#[derive(Debug, Clone)]
pub struct ZeroLambdaTriple {
    /// (a) nonsingularity of the bordered matrix with the plain Hessian core.
    pub nonsingular_bordered: bool,
    pub bordered_det: f64,
    /// (b) `core v + gamma border = 0, gamma >= 0  =>  border . v <= 0`.
    pub ray_nonpositive: ImplicationVerdict,
    /// (c) `ker core` orthogonal to the border.
    pub kernel_orthogonal: bool,
}

impl ZeroLambdaTriple {
    pub fn all_hold(&self) -> bool {
        self.nonsingular_bordered && self.ray_nonpositive.holds && self.kernel_orthogonal
    }
}

fn ray_cone(core: &DMatrix<f64>, border: &DVector<f64>) -> ConeSpec {
    let n = border.len();
    let mut eq = DMatrix::zeros(n, n + 1);
    eq.view_mut((0, 0), (n, n)).copy_from(core);
    eq.view_mut((0, n), (n, 1)).copy_from(border);
    let mut gamma_nonneg = DVector::zeros(n + 1);
    gamma_nonneg[n] = 1.0;
    ConeSpec {
        eq,
        nonneg: vec![gamma_nonneg],
        strict: vec![],
    }
}

fn padded(v: &DVector<f64>) -> DVector<f64> {
    let mut out = DVector::zeros(v.len() + 1);
    out.rows_mut(0, v.len()).copy_from(v);
    out
}

/// Zero-multiplier sufficient conditions from (core, border) data.
pub fn zero_lambda_sufficient_parts(
    core: &DMatrix<f64>,
    border: &DVector<f64>,
    tol: &TolerancePolicy,
) -> Result<ZeroLambdaTriple> {
    let bm = BorderedMatrix::new(core.clone(), border.clone());
    let (bordered_det, nonsingular_bordered) = det_and_nonsingular(&bm.assembled, tol);
    let ray_nonpositive = nonpositive_on_cone(&ray_cone(core, border), &padded(border), tol)?;
    let kernel = kernel_basis(core, tol);
    let border_row = DMatrix::from_fn(1, border.len(), |_, j| border[j]);
    let kernel_orthogonal = contained_in_kernel(&kernel, &border_row, tol)?;
    Ok(ZeroLambdaTriple {
        nonsingular_bordered,
        bordered_det,
        ray_nonpositive,
        kernel_orthogonal,
    })
}

pub fn zero_lambda_sufficient(
    instance: &QpInstance,
    x_bar: &DVector<f64>,
    tol: &TolerancePolicy,
) -> Result<ZeroLambdaTriple> {
    let border = active_border(instance, x_bar)?;
    zero_lambda_sufficient_parts(&instance.obj_quad, &border, tol)
}

/// Zero-multiplier necessary condition: the closed cone
/// `{core v + gamma border = 0, border . v >= 0, gamma >= 0}` contains only 0.
pub fn zero_lambda_necessary_parts(
    core: &DMatrix<f64>,
    border: &DVector<f64>,
    tol: &TolerancePolicy,
) -> Result<ImplicationVerdict> {
    let n = border.len();
    let mut premise = ray_cone(core, border);
    premise.nonneg.push(padded(border));
    cone_implication(&premise, &DMatrix::identity(n + 1, n + 1), tol)
}

pub fn zero_lambda_necessary(
    instance: &QpInstance,
    x_bar: &DVector<f64>,
    tol: &TolerancePolicy,
) -> Result<ImplicationVerdict> {
    let border = active_border(instance, x_bar)?;
    zero_lambda_necessary_parts(&instance.obj_quad, &border, tol)
}

/// Strong regularity at a positive multiplier: nonsingularity of the bordered
/// Lagrangian-Hessian matrix. When true, the stationary map has a Lipschitz
/// continuous single-valued localization around the reference parameter.
pub fn strong_regularity_positive(
    s: &DerivativeSnapshot,
    lambda: f64,
    tol: &TolerancePolicy,
) -> bool {
    bordered_test_from_snapshot(s, lambda, tol).1
}

/// Strong regularity at a zero multiplier: nonsingular objective Hessian and
/// positive curvature of its inverse along the constraint gradient.
pub fn strong_regularity_zero(s: &DerivativeSnapshot, tol: &TolerancePolicy) -> bool {
    let n = s.dim();
    let svd = s.hess_obj.clone().svd(false, false);
    let smax = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
    let smin = svd
        .singular_values
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    if smin <= tol.rank_threshold(n, n, smax) {
        return false;
    }
    let lu = s.hess_obj.clone().lu();
    let Some(v) = lu.solve(&s.grad_con) else {
        return false;
    };
    let q = s.grad_con.dot(&v);
    let tau_q = n as f64 * f64::EPSILON * s.grad_con.norm_squared() / smin;
    q > tau_q
}

/// Which multiplier regime the critical-face enumeration runs in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LambdaCase {
    Positive,
    Zero,
}

/// Critical-face condition for the cone `R^n x R+`.
///
/// Positive multiplier: the critical cone is the whole space and the single
/// face pair reduces to nonsingularity of the bordered matrix (negated-row
/// variant). Zero multiplier with a negative base normal: the critical cone
/// is `R^n x {0}` and only the core matters. Zero multiplier at a stationary
/// point (zero base normal): three face pairs — core nonsingular, bordered
/// matrix nonsingular, and the mixed-face implication
/// `[core u - gamma border = 0, border . u <= 0, gamma >= 0] => u = 0, gamma = 0`.
pub fn critical_face_check(
    core: &DMatrix<f64>,
    border: &DVector<f64>,
    lambda_case: LambdaCase,
    v0_negative: bool,
    tol: &TolerancePolicy,
) -> Result<bool> {
    let bm = BorderedMatrix::new(core.clone(), border.clone());
    match (lambda_case, v0_negative) {
        (LambdaCase::Positive, _) => {
            let (_, sym_nonsing) = det_and_nonsingular(&bm.assembled, tol);
            let (_, neg_nonsing) = det_and_nonsingular(&bm.negated_row(), tol);
            debug_assert_eq!(sym_nonsing, neg_nonsing);
            Ok(neg_nonsing)
        }
        (LambdaCase::Zero, true) => Ok(det_and_nonsingular(core, tol).1),
        (LambdaCase::Zero, false) => {
            let core_ok = det_and_nonsingular(core, tol).1;
            if !core_ok {
                return Ok(false);
            }
            let full_ok = det_and_nonsingular(&bm.negated_row(), tol).1;
            if !full_ok {
                return Ok(false);
            }
            let n = border.len();
            let mut eq = DMatrix::zeros(n, n + 1);
            eq.view_mut((0, 0), (n, n)).copy_from(core);
            eq.view_mut((0, n), (n, 1)).copy_from(&(-border));
            let mut gamma_nonneg = DVector::zeros(n + 1);
            gamma_nonneg[n] = 1.0;
            let premise = ConeSpec {
                eq,
                nonneg: vec![padded(&(-border)), gamma_nonneg],
                strict: vec![],
            };
            let mixed = cone_implication(&premise, &DMatrix::identity(n + 1, n + 1), tol)?;
            Ok(mixed.holds)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::fixtures::*;
    use crate::problem::qp_snapshot;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn tol() -> TolerancePolicy {
        TolerancePolicy::default()
    }

    /// Cofactor-expansion determinant, the independent oracle.
    fn cofactor_det(m: &DMatrix<f64>) -> f64 {
        let n = m.nrows();
        if n == 1 {
            return m[(0, 0)];
        }
        let mut det = 0.0;
        for j in 0..n {
            let minor = m.clone().remove_row(0).remove_column(j);
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            det += sign * m[(0, j)] * cofactor_det(&minor);
        }
        det
    }

    fn sym_rand(rng: &mut impl Rng, n: usize) -> DMatrix<f64> {
        let raw = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-2.0..2.0f64));
        (&raw + raw.transpose()) * 0.5
    }

    #[test]
    fn interior_test_examples() {
        let singular = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, -8.0]);
        let (_, ok) = interior_test(&singular, &tol());
        assert!(!ok);
        let (det, ok) = interior_test(&DMatrix::identity(3, 3), &tol());
        assert!((det - 1.0).abs() < 1e-14);
        assert!(ok);
    }

    #[test]
    fn determinant_matches_cofactor_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        for _ in 0..20 {
            let m = DMatrix::from_fn(5, 5, |_, _| rng.gen_range(-1.0..1.0f64));
            let (det, _) = det_and_nonsingular(&m, &tol());
            let oracle = cofactor_det(&m);
            assert!(
                (det - oracle).abs() <= 1e-9 * (1.0 + oracle.abs()),
                "lu {det} vs cofactor {oracle}"
            );
        }
    }

    #[test]
    fn bordered_test_on_disk_instance() {
        let inst = disk_instance();
        let (det, ok) =
            bordered_test_positive_lambda(&inst, &disk_x_bar(), 8.0, &tol()).unwrap();
        assert!((det.abs() - 63.0 / 8.0).abs() <= 1e-12 * (63.0 / 8.0));
        assert!(ok);
        assert!(bordered_test_positive_lambda(&inst, &disk_x_bar(), 0.0, &tol()).is_err());
    }

    #[test]
    fn bordered_test_on_ball_instance() {
        let inst = ball_instance();
        for t in [0.0, std::f64::consts::FRAC_PI_4, std::f64::consts::FRAC_PI_2] {
            let (det, ok) =
                bordered_test_positive_lambda(&inst, &ball_x_bar_t(t), 8.0, &tol()).unwrap();
            assert!(det.abs() <= 1e-10, "degenerate circle point: det = {det}");
            assert!(!ok);
        }
        let x = nalgebra::DVector::from_vec(vec![-1.0, 0.0, 0.0]);
        let (det, ok) = bordered_test_positive_lambda(&inst, &x, 1.0, &tol()).unwrap();
        // Oracle: cofactor expansion of [[1,0,0,-1],[0,-7,0,0],[0,0,-7,0],[-1,0,0,0]].
        let expect = cofactor_det(&DMatrix::from_row_slice(
            4,
            4,
            &[
                1.0, 0.0, 0.0, -1.0, //
                0.0, -7.0, 0.0, 0.0, //
                0.0, 0.0, -7.0, 0.0, //
                -1.0, 0.0, 0.0, 0.0,
            ],
        ));
        assert_eq!(expect, -49.0);
        assert!((det - expect).abs() <= 1e-10);
        assert!(ok);
    }

    #[test]
    fn zero_lambda_sufficient_examples() {
        let u = DVector::from_vec(vec![1.0, 0.0]);
        let t = zero_lambda_sufficient_parts(&DMatrix::identity(2, 2), &u, &tol()).unwrap();
        assert!(t.all_hold());

        let d = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        let u = DVector::from_vec(vec![0.0, 1.0]);
        let t = zero_lambda_sufficient_parts(&d, &u, &tol()).unwrap();
        assert!(!t.ray_nonpositive.holds);
        // The stated witness: v = (0,1), gamma = 1.
        let w = t.ray_nonpositive.witness.unwrap();
        let v = w.rows(0, 2).into_owned();
        let gamma = w[2];
        assert!((&d * &v + &u * gamma).norm() < 1e-8);
        assert!(gamma >= -1e-9);
        assert!(u.dot(&v) > 1e-9);

        let t =
            zero_lambda_sufficient_parts(&DMatrix::zeros(2, 2), &DVector::from_vec(vec![1.0, 0.0]), &tol())
                .unwrap();
        assert!(!t.nonsingular_bordered);
        assert!(!t.kernel_orthogonal);
    }

    #[test]
    fn zero_lambda_necessary_examples() {
        let e1 = DVector::from_vec(vec![1.0, 0.0]);
        let v = zero_lambda_necessary_parts(&DMatrix::identity(2, 2), &e1, &tol()).unwrap();
        assert!(v.holds);

        let v = zero_lambda_necessary_parts(&DMatrix::zeros(2, 2), &e1, &tol()).unwrap();
        assert!(!v.holds);

        let d = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        let u = DVector::from_vec(vec![0.0, 1.0]);
        let v = zero_lambda_necessary_parts(&d, &u, &tol()).unwrap();
        assert!(!v.holds);
        let w = v.witness.unwrap();
        let v1 = w.rows(0, 2).into_owned();
        let gamma = w[2];
        assert!((&d * &v1 + &u * gamma).norm() < 1e-8);
        assert!(u.dot(&v1) >= -1e-9 && gamma >= -1e-9);
        assert!(w.norm() > 1e-6);
    }

    #[test]
    fn necessary_condition_fails_at_degenerate_circle_point() {
        // Zero-multiplier necessary cone at the 3-d instance's circle point:
        // the bordered matrix with the plain Hessian core is singular, so a
        // nonzero (v, gamma) survives and the implication fails.
        let inst = ball_instance();
        let x0 = ball_x_bar_t(0.0);
        let border = (&inst.con_quad * &x0) + &inst.con_lin;
        let v = zero_lambda_necessary_parts(&inst.obj_quad, &border, &tol()).unwrap();
        assert!(!v.holds);
        let w = v.witness.unwrap();
        let v1 = w.rows(0, 3).into_owned();
        let gamma = w[3];
        assert!((&inst.obj_quad * &v1 + &border * gamma).norm() < 1e-7);
        assert!(border.dot(&v1) >= -1e-9 && gamma >= -1e-9);
        assert!(w.norm() > 1e-6);
    }

    #[test]
    fn strong_regularity_examples() {
        let s = qp_snapshot(&disk_instance(), &disk_x_bar()).unwrap();
        assert!(strong_regularity_positive(&s, 8.0, &tol()));

        let s = qp_snapshot(&ball_instance(), &ball_x_bar_t(0.7)).unwrap();
        assert!(!strong_regularity_positive(&s, 8.0, &tol()));

        // n = 1 with zero Lagrangian Hessian but nonzero border.
        let (inst, _) = crate::problem::QpInstance::new(
            DMatrix::zeros(1, 1),
            DVector::from_vec(vec![-1.0]),
            DMatrix::identity(1, 1),
            DVector::zeros(1),
            -0.5,
        )
        .unwrap();
        let s = qp_snapshot(&inst, &DVector::from_vec(vec![1.0])).unwrap();
        assert!(strong_regularity_positive(&s, 1.0, &tol()));
    }

    #[test]
    fn strong_regularity_zero_examples() {
        let mk = |d: DMatrix<f64>, x: Vec<f64>| {
            let x = DVector::from_vec(x);
            let c = -(&d * &x);
            let (inst, _) = crate::problem::QpInstance::new(
                d,
                c,
                DMatrix::identity(x.len(), x.len()),
                DVector::zeros(x.len()),
                -0.5,
            )
            .unwrap();
            qp_snapshot(&inst, &x).unwrap()
        };
        let s = mk(DMatrix::identity(2, 2), vec![1.0, 0.0]);
        assert!(strong_regularity_zero(&s, &tol()));

        let s = mk(
            DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]),
            vec![0.0, 1.0],
        );
        assert!(!strong_regularity_zero(&s, &tol()));

        let s = mk(DMatrix::zeros(2, 2), vec![1.0, 0.0]);
        assert!(!strong_regularity_zero(&s, &tol()));
    }

    #[test]
    fn critical_face_examples() {
        // Positive case on the disk instance equals strong regularity.
        let s = qp_snapshot(&disk_instance(), &disk_x_bar()).unwrap();
        let core = &s.hess_obj + &s.hess_con * 8.0;
        let cf = critical_face_check(&core, &s.grad_con, LambdaCase::Positive, false, &tol())
            .unwrap();
        assert!(cf);
        assert_eq!(cf, strong_regularity_positive(&s, 8.0, &tol()));

        // Zero case, situation (b).
        let e1 = DVector::from_vec(vec![1.0, 0.0]);
        assert!(critical_face_check(
            &DMatrix::identity(2, 2),
            &e1,
            LambdaCase::Zero,
            false,
            &tol()
        )
        .unwrap());
        let d = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        let u = DVector::from_vec(vec![0.0, 1.0]);
        assert!(!critical_face_check(&d, &u, LambdaCase::Zero, false, &tol()).unwrap());

        // Situation (a) only needs the core.
        assert!(critical_face_check(&d, &u, LambdaCase::Zero, true, &tol()).unwrap());
    }

    #[test]
    fn positive_case_equivalences_on_random_data() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..100 {
            let n = rng.gen_range(1..6);
            let core = sym_rand(&mut rng, n);
            let border = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0f64));
            let bm = BorderedMatrix::new(core.clone(), border.clone());
            let (_, bordered) = det_and_nonsingular(&bm.assembled, &tol());
            let cf = critical_face_check(&core, &border, LambdaCase::Positive, false, &tol())
                .unwrap();
            assert_eq!(bordered, cf);
        }
    }

    #[test]
    fn zero_case_equivalence_with_strong_regularity() {
        // Lemma-level equivalence: situation (b) face checks hold iff the
        // core is nonsingular with positive inverse curvature at the border.
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for _ in 0..100 {
            let n = rng.gen_range(1..5);
            let core = sym_rand(&mut rng, n);
            let border = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0f64));
            if border.norm() < 0.1 {
                continue;
            }
            let cf =
                critical_face_check(&core, &border, LambdaCase::Zero, false, &tol()).unwrap();
            let svd = core.clone().svd(false, false);
            let smin = svd
                .singular_values
                .iter()
                .cloned()
                .fold(f64::INFINITY, f64::min);
            let sr = if smin > 1e-8 {
                let v = core.clone().lu().solve(&border).unwrap();
                border.dot(&v) > 1e-12
            } else {
                false
            };
            assert_eq!(cf, sr, "core {core} border {border}");
        }
    }

    #[test]
    fn trs_zero_lambda_curvature_characterization() {
        // With a nonsingular core and border = x, conditions (b) and (c)
        // hold iff x' core^{-1} x >= 0.
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let mut seen_pos = 0;
        let mut seen_neg = 0;
        for _ in 0..200 {
            let n = rng.gen_range(2..5);
            let core = sym_rand(&mut rng, n);
            let svd = core.clone().svd(false, false);
            let smin = svd
                .singular_values
                .iter()
                .cloned()
                .fold(f64::INFINITY, f64::min);
            if smin < 1e-6 {
                continue;
            }
            let x = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0f64));
            if x.norm() < 0.1 {
                continue;
            }
            let t = zero_lambda_sufficient_parts(&core, &x, &tol()).unwrap();
            let q = x.dot(&core.clone().lu().solve(&x).unwrap());
            let both = t.ray_nonpositive.holds && t.kernel_orthogonal;
            if q.abs() < 1e-9 {
                continue;
            }
            assert_eq!(both, q > 0.0, "q = {q}");
            if q > 0.0 {
                seen_pos += 1;
            } else {
                seen_neg += 1;
            }
        }
        assert!(seen_pos > 10 && seen_neg > 10);
    }

    #[test]
    fn sufficient_triple_implies_necessary() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let mut checked = 0;
        for _ in 0..300 {
            let n = rng.gen_range(1..5);
            let core = sym_rand(&mut rng, n);
            let border = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0f64));
            let t = zero_lambda_sufficient_parts(&core, &border, &tol()).unwrap();
            if t.all_hold() {
                let nec = zero_lambda_necessary_parts(&core, &border, &tol()).unwrap();
                assert!(nec.holds, "sufficient held but necessary failed");
                checked += 1;
            }
        }
        assert!(checked > 20);
    }

    #[test]
    fn det_verdict_invariant_under_constraint_rescaling() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        for _ in 0..50 {
            let n = rng.gen_range(1..5);
            let d = sym_rand(&mut rng, n);
            let a = sym_rand(&mut rng, n) + DMatrix::identity(n, n) * 2.0;
            let x = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0f64));
            let b = DVector::zeros(n);
            let u = &a * &x + &b;
            if u.norm() < 0.2 {
                continue;
            }
            let lambda = rng.gen_range(0.1..4.0f64);
            let ax = &a * &x;
            let alpha = -(0.5 * x.dot(&ax));
            let (inst, _) =
                crate::problem::QpInstance::new(d.clone(), DVector::zeros(n), a.clone(), b.clone(), alpha)
                    .unwrap();
            let (_, base) = bordered_test_positive_lambda(&inst, &x, lambda, &tol()).unwrap();
            for t in [0.5, 2.0] {
                let (scaled, _) = crate::problem::QpInstance::new(
                    d.clone(),
                    DVector::zeros(n),
                    &a * t,
                    &b * t,
                    alpha * t,
                )
                .unwrap();
                let (_, got) =
                    bordered_test_positive_lambda(&scaled, &x, lambda / t, &tol()).unwrap();
                assert_eq!(base, got);
            }
        }
    }
}
