//! Quadratic-program instances and derivative snapshots at a reference point.
//!
//! An instance is the parameter tuple w = (D, c, A, b, alpha) of
//!
//! ```text
//! minimize   f0(x) = 1/2 x'Dx + c'x
//! subject to F(x)  = 1/2 x'Ax + b'x + alpha <= 0,
//! ```
//!
//! with D and A symmetric. The half convention on F is normative everywhere.
//! A snapshot collects all first and second derivatives of f0 and F at a
//! point, including the structured parameter-space blocks used by the
//! certificate modules.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Above this dimension the huge parameter-space derivative blocks
/// (d = 2n^2 + 2n + 1 rows) are not materialized; certificate modules rely on
/// their structurally trivial kernels instead.
pub const MATERIALIZE_LIMIT: usize = 32;

/// Relative asymmetry up to which inputs are symmetrized silently.
const SYM_SILENT: f64 = 1e-12;
/// Relative asymmetry up to which inputs are symmetrized with a warning;
/// beyond this the input is rejected.
const SYM_REJECT: f64 = 1e-6;

/// The parameter tuple w = (D, c, A, b, alpha).
#[derive(Debug, Clone, PartialEq)]
pub struct QpInstance {
    pub dim: usize,
    /// Objective curvature D (symmetric n x n).
    pub obj_quad: DMatrix<f64>,
    /// Objective linear term c.
    pub obj_lin: DVector<f64>,
    /// Constraint curvature A (symmetric n x n).
    pub con_quad: DMatrix<f64>,
    /// Constraint linear term b.
    pub con_lin: DVector<f64>,
    /// Constraint constant alpha.
    pub con_const: f64,
}

/// Values and x-gradients of the objective and constraint at a point.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub objective: f64,
    pub constraint: f64,
    pub grad_obj: DVector<f64>,
    pub grad_con: DVector<f64>,
}

/// Materialized parameter-space derivative blocks.
///
/// Rows are ordered as the flattened parameter coordinates
/// (D entries row-major, c, A entries row-major, b, alpha), so
/// d = (n^2 + n) + (n^2 + n + 1).
#[derive(Debug, Clone)]
pub struct WBlocks {
    /// d x n mixed Hessian of the objective.
    pub hess_wx_obj: DMatrix<f64>,
    /// d x n mixed Hessian of the constraint.
    pub hess_wx_con: DMatrix<f64>,
    /// d-vector parameter gradient of the constraint.
    pub grad_w_con: DVector<f64>,
}

/// All derivatives of f0 and F at a reference point.
#[derive(Debug, Clone)]
pub struct DerivativeSnapshot {
    pub x_bar: DVector<f64>,
    pub grad_obj: DVector<f64>,
    pub hess_obj: DMatrix<f64>,
    /// F(x_bar, w_bar).
    pub con_value: f64,
    pub grad_con: DVector<f64>,
    pub hess_con: DMatrix<f64>,
    /// Parameter-space blocks; `None` above [`MATERIALIZE_LIMIT`].
    pub w_blocks: Option<WBlocks>,
    /// Asserts the quadratic-program block structure (trivial kernels of the
    /// parameter-space blocks), letting certificate modules shortcut them.
    pub qp_structure: bool,
    /// Scale for the activity test: 1 + |alpha| for QP snapshots.
    pub activity_scale: f64,
}

impl DerivativeSnapshot {
    pub fn dim(&self) -> usize {
        self.x_bar.len()
    }
}

/// Constraint activity classification of a reference point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CaseTag {
    /// F(x_bar) < 0: constraint inactive.
    Interior,
    /// F(x_bar) = 0 with positive multiplier.
    BoundaryPositive,
    /// F(x_bar) = 0 with zero multiplier.
    BoundaryZero,
}

/// Reference-point classification with its Lagrange multiplier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CaseInfo {
    pub case_tag: CaseTag,
    pub lambda: f64,
    /// |F(x_bar)| used for the activity decision.
    pub activity_residual: f64,
}

fn asymmetry(m: &DMatrix<f64>) -> f64 {
    let scale = m.amax();
    if scale == 0.0 {
        return 0.0;
    }
    let mut worst: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst / scale
}

fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

impl QpInstance {
    /// Validate dimensions and symmetry, symmetrizing small asymmetries.
    /// Returns warnings for asymmetries above the silent threshold.
    pub fn new(
        obj_quad: DMatrix<f64>,
        obj_lin: DVector<f64>,
        con_quad: DMatrix<f64>,
        con_lin: DVector<f64>,
        con_const: f64,
    ) -> Result<(Self, Vec<String>)> {
        let n = obj_lin.len();
        if n == 0 {
            return Err(Error::EmptyInstance);
        }
        for mat in [&obj_quad, &con_quad] {
            if mat.nrows() != n || mat.ncols() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: mat.nrows().max(mat.ncols()),
                });
            }
        }
        if con_lin.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: con_lin.len(),
            });
        }
        let mut warnings = Vec::new();
        let mut fix = |m: &DMatrix<f64>, name: &'static str| -> Result<DMatrix<f64>> {
            let a = asymmetry(m);
            if a > SYM_REJECT {
                return Err(Error::NotSymmetric { name, asymmetry: a });
            }
            if a > SYM_SILENT {
                warnings.push(format!(
                    "matrix {name} symmetrized: relative asymmetry {a:.3e}"
                ));
            }
            Ok(symmetrize(m))
        };
        let obj_quad = fix(&obj_quad, "D")?;
        let con_quad = fix(&con_quad, "A")?;
        Ok((
            QpInstance {
                dim: n,
                obj_quad,
                obj_lin,
                con_quad,
                con_lin,
                con_const,
            },
            warnings,
        ))
    }

    pub fn check_point(&self, x: &DVector<f64>) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(())
    }
}

/// Evaluate objective, constraint and their x-gradients at `x`.
pub fn evaluate(instance: &QpInstance, x: &DVector<f64>) -> Result<Evaluation> {
    instance.check_point(x)?;
    let dx = &instance.obj_quad * x;
    let ax = &instance.con_quad * x;
    Ok(Evaluation {
        objective: 0.5 * x.dot(&dx) + instance.obj_lin.dot(x),
        constraint: 0.5 * x.dot(&ax) + instance.con_lin.dot(x) + instance.con_const,
        grad_obj: dx + &instance.obj_lin,
        grad_con: ax + &instance.con_lin,
    })
}

fn build_w_blocks(x: &DVector<f64>) -> WBlocks {
    let n = x.len();
    let d1 = n * n + n;
    let d2 = n * n + n + 1;
    let d = d1 + d2;

    // d(Dx + c)_k / d(D_ij) = x_j if k == i, plus identity for the c rows.
    let mut hess_wx_obj = DMatrix::zeros(d, n);
    let mut hess_wx_con = DMatrix::zeros(d, n);
    let mut grad_w_con = DVector::zeros(d);
    for i in 0..n {
        for j in 0..n {
            hess_wx_obj[(i * n + j, i)] = x[j];
            hess_wx_con[(d1 + i * n + j, i)] = x[j];
            grad_w_con[d1 + i * n + j] = 0.5 * x[i] * x[j];
        }
        hess_wx_obj[(n * n + i, i)] = 1.0;
        hess_wx_con[(d1 + n * n + i, i)] = 1.0;
        grad_w_con[d1 + n * n + i] = x[i];
    }
    grad_w_con[d - 1] = 1.0;

    WBlocks {
        hess_wx_obj,
        hess_wx_con,
        grad_w_con,
    }
}

/// Closed-form derivative snapshot of a QP instance at `x_bar`.
pub fn qp_snapshot(instance: &QpInstance, x_bar: &DVector<f64>) -> Result<DerivativeSnapshot> {
    instance.check_point(x_bar)?;
    let eval = evaluate(instance, x_bar)?;
    let w_blocks = if instance.dim <= MATERIALIZE_LIMIT {
        Some(build_w_blocks(x_bar))
    } else {
        None
    };
    Ok(DerivativeSnapshot {
        x_bar: x_bar.clone(),
        grad_obj: eval.grad_obj,
        hess_obj: instance.obj_quad.clone(),
        con_value: eval.constraint,
        grad_con: eval.grad_con,
        hess_con: instance.con_quad.clone(),
        w_blocks,
        qp_structure: true,
        activity_scale: 1.0 + instance.con_const.abs(),
    })
}

// -------------------------------------------------------------------------
// JSON instance schema:
// {"n": int, "D": [[..]], "c": [..], "A": [[..]], "b": [..],
//  "alpha": float, "x_bar": [..]}   (row-major matrices, IEEE doubles)
// -------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct RawInstance {
    n: usize,
    #[serde(rename = "D")]
    d: Vec<Vec<f64>>,
    c: Vec<f64>,
    #[serde(rename = "A")]
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
    alpha: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    x_bar: Option<Vec<f64>>,
}

/// An instance loaded from JSON together with its optional reference point.
#[derive(Debug, Clone)]
pub struct InstanceFile {
    pub instance: QpInstance,
    pub x_bar: Option<DVector<f64>>,
    pub warnings: Vec<String>,
}

fn rows_to_matrix(rows: &[Vec<f64>], n: usize, name: &'static str) -> Result<DMatrix<f64>> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(Error::InvalidConfig(format!(
            "matrix {name} must be {n} x {n}"
        )));
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Ok(DMatrix::from_row_slice(n, n, &flat))
}

impl InstanceFile {
    pub fn from_json(text: &str) -> std::result::Result<Self, String> {
        let raw: RawInstance = serde_json::from_str(text)
            .map_err(|e| format!("parse error at line {} column {}: {e}", e.line(), e.column()))?;
        Self::from_raw(raw).map_err(|e| e.to_string())
    }

    fn from_raw(raw: RawInstance) -> Result<Self> {
        let n = raw.n;
        if n == 0 {
            return Err(Error::EmptyInstance);
        }
        let d = rows_to_matrix(&raw.d, n, "D")?;
        let a = rows_to_matrix(&raw.a, n, "A")?;
        if raw.c.len() != n || raw.b.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: raw.c.len().max(raw.b.len()),
            });
        }
        let x_bar = match raw.x_bar {
            Some(v) => {
                if v.len() != n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        got: v.len(),
                    });
                }
                Some(DVector::from_vec(v))
            }
            None => None,
        };
        let (instance, warnings) = QpInstance::new(
            d,
            DVector::from_vec(raw.c),
            a,
            DVector::from_vec(raw.b),
            raw.alpha,
        )?;
        Ok(InstanceFile {
            instance,
            x_bar,
            warnings,
        })
    }
}

/// Serialize an instance (with optional reference point) to the JSON schema.
pub fn instance_to_json(instance: &QpInstance, x_bar: Option<&DVector<f64>>) -> String {
    let n = instance.dim;
    let mat = |m: &DMatrix<f64>| -> Vec<Vec<f64>> {
        (0..n)
            .map(|i| (0..n).map(|j| m[(i, j)]).collect())
            .collect()
    };
    let raw = RawInstance {
        n,
        d: mat(&instance.obj_quad),
        c: instance.obj_lin.iter().copied().collect(),
        a: mat(&instance.con_quad),
        b: instance.con_lin.iter().copied().collect(),
        alpha: instance.con_const,
        x_bar: x_bar.map(|v| v.iter().copied().collect()),
    };
    crate::jsonio::to_string_17(&raw)
}
