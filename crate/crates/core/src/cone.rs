//! Kernel bases, subspace inclusion, distance to a ray, and an implication
//! checker for polyhedral cones described by linear equations, sign
//! constraints and strict inequalities.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::simplex::{feasible_point, Feasibility};
use crate::tolerance::TolerancePolicy;

/// Orthonormal basis of a linear subspace (possibly empty).
#[derive(Debug, Clone)]
pub struct SubspaceBasis {
    pub ambient_dim: usize,
    pub vectors: Vec<DVector<f64>>,
}

impl SubspaceBasis {
    pub fn dim(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_trivial(&self) -> bool {
        self.vectors.is_empty()
    }
}

/// A closed-or-relatively-open convex cone
/// `{z | Ez = 0, sigma.z >= 0, s.z > 0}`.
#[derive(Debug, Clone)]
pub struct ConeSpec {
    /// Rows are linear equations `Ez = 0`; may have zero rows.
    pub eq: DMatrix<f64>,
    pub nonneg: Vec<DVector<f64>>,
    pub strict: Vec<DVector<f64>>,
}

impl ConeSpec {
    pub fn ambient(&self) -> usize {
        self.eq.ncols()
    }

    fn validate(&self) -> Result<()> {
        let n = self.ambient();
        for v in self.nonneg.iter().chain(self.strict.iter()) {
            if v.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: v.len(),
                });
            }
        }
        Ok(())
    }
}

/// Outcome of a cone implication check.
#[derive(Debug, Clone)]
pub struct ImplicationVerdict {
    pub holds: bool,
    /// A premise point violating the conclusion, when `holds` is false.
    pub witness: Option<DVector<f64>>,
    /// The premise cone is empty (strict part unsatisfiable).
    pub vacuous: bool,
}

/// Orthonormal basis of `{z | Mz = 0}` with the numerical rank decided by the
/// tolerance policy.
pub fn kernel_basis(m: &DMatrix<f64>, tol: &TolerancePolicy) -> SubspaceBasis {
    let (rows, cols) = m.shape();
    if rows == 0 {
        let vectors = (0..cols)
            .map(|j| DVector::from_fn(cols, |i, _| if i == j { 1.0 } else { 0.0 }))
            .collect();
        return SubspaceBasis {
            ambient_dim: cols,
            vectors,
        };
    }
    // Pad with zero rows so the thin SVD carries all right singular vectors.
    let work = if rows < cols {
        let mut padded = DMatrix::zeros(cols, cols);
        padded.view_mut((0, 0), (rows, cols)).copy_from(m);
        padded
    } else {
        m.clone()
    };
    let svd = work.svd(false, true);
    let v_t = svd.v_t.expect("svd requested v_t");
    let sigma = &svd.singular_values;
    let sigma_max = sigma.iter().cloned().fold(0.0f64, f64::max);
    let tau = tol.rank_threshold(rows, cols, sigma_max);
    let mut vectors = Vec::new();
    for i in 0..sigma.len() {
        if sigma[i] <= tau {
            vectors.push(v_t.row(i).transpose());
        }
    }
    SubspaceBasis {
        ambient_dim: cols,
        vectors,
    }
}

/// True iff every basis vector of `basis` lies in the kernel of `t`
/// (`||T v|| <= check * (1 + ||T||)`).
pub fn contained_in_kernel(
    basis: &SubspaceBasis,
    t: &DMatrix<f64>,
    tol: &TolerancePolicy,
) -> Result<bool> {
    if !basis.is_trivial() && t.ncols() != basis.ambient_dim {
        return Err(Error::DimensionMismatch {
            expected: basis.ambient_dim,
            got: t.ncols(),
        });
    }
    let bound = tol.check * (1.0 + t.norm());
    Ok(basis.vectors.iter().all(|v| (t * v).norm() <= bound))
}

/// Basis of `ker(m1) ∩ ker(extra)`, computed from the vertical stack.
pub fn intersect_with_rows(
    m1: &DMatrix<f64>,
    extra: &DMatrix<f64>,
    tol: &TolerancePolicy,
) -> Result<SubspaceBasis> {
    if m1.ncols() != extra.ncols() {
        return Err(Error::DimensionMismatch {
            expected: m1.ncols(),
            got: extra.ncols(),
        });
    }
    let rows = m1.nrows() + extra.nrows();
    let mut stacked = DMatrix::zeros(rows, m1.ncols());
    stacked.view_mut((0, 0), m1.shape()).copy_from(m1);
    stacked
        .view_mut((m1.nrows(), 0), extra.shape())
        .copy_from(extra);
    Ok(kernel_basis(&stacked, tol))
}

/// Premise constraint rows expressed in the kernel coordinates of `E`.
struct ReducedCone {
    basis: SubspaceBasis,
    rows: Vec<DVector<f64>>,
    rhs: Vec<f64>,
}

fn reduce(premise: &ConeSpec, tol: &TolerancePolicy) -> ReducedCone {
    let basis = kernel_basis(&premise.eq, tol);
    let k = basis.dim();
    let in_coords = |v: &DVector<f64>| -> DVector<f64> {
        DVector::from_fn(k, |j, _| basis.vectors[j].dot(v))
    };
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for sigma in &premise.nonneg {
        rows.push(in_coords(sigma));
        rhs.push(0.0);
    }
    for s in &premise.strict {
        // Conic normalization: on a cone, s.z > 0 is solvable iff s.z >= 1 is.
        rows.push(in_coords(s));
        rhs.push(1.0);
    }
    ReducedCone { basis, rows, rhs }
}

fn lift(basis: &SubspaceBasis, y: &DVector<f64>) -> DVector<f64> {
    let mut z = DVector::zeros(basis.ambient_dim);
    for (j, v) in basis.vectors.iter().enumerate() {
        z += v * y[j];
    }
    z
}

/// Decide whether every premise point `z` satisfies `Tz = 0`.
///
/// The implication fails iff, for some row `r` of `T` and sign, the system
/// `{premise, ±r.z >= 1}` is feasible; each probe is a phase-one solve in the
/// kernel coordinates of the equations. `vacuous` is set when the premise
/// itself (with strict rows normalized to `>= 1`) is infeasible.
pub fn cone_implication(
    premise: &ConeSpec,
    conclusion: &DMatrix<f64>,
    tol: &TolerancePolicy,
) -> Result<ImplicationVerdict> {
    premise.validate()?;
    if conclusion.ncols() != premise.ambient() {
        return Err(Error::DimensionMismatch {
            expected: premise.ambient(),
            got: conclusion.ncols(),
        });
    }
    let red = reduce(premise, tol);
    let k = red.basis.dim();

    match feasible_point(&red.rows, &red.rhs, k) {
        Feasibility::Infeasible => {
            return Ok(ImplicationVerdict {
                holds: true,
                witness: None,
                vacuous: true,
            })
        }
        Feasibility::IterationCap => return Err(Error::Indeterminate),
        Feasibility::Feasible(_) => {}
    }

    for i in 0..conclusion.nrows() {
        let r = conclusion.row(i).transpose();
        let r_red = DVector::from_fn(k, |j, _| red.basis.vectors[j].dot(&r));
        if r_red.norm() <= 1e-300 {
            continue;
        }
        for sign in [1.0, -1.0] {
            let mut rows = red.rows.clone();
            let mut rhs = red.rhs.clone();
            rows.push(&r_red * sign);
            rhs.push(1.0);
            match feasible_point(&rows, &rhs, k) {
                Feasibility::Feasible(y) => {
                    return Ok(ImplicationVerdict {
                        holds: false,
                        witness: Some(lift(&red.basis, &y)),
                        vacuous: false,
                    });
                }
                Feasibility::IterationCap => return Err(Error::Indeterminate),
                Feasibility::Infeasible => {}
            }
        }
    }
    Ok(ImplicationVerdict {
        holds: true,
        witness: None,
        vacuous: false,
    })
}

/// Decide whether every premise point `z` satisfies `f.z <= 0`, by checking
/// infeasibility of `f.z >= 1` on the cone.
pub fn nonpositive_on_cone(
    premise: &ConeSpec,
    functional: &DVector<f64>,
    tol: &TolerancePolicy,
) -> Result<ImplicationVerdict> {
    premise.validate()?;
    if functional.len() != premise.ambient() {
        return Err(Error::DimensionMismatch {
            expected: premise.ambient(),
            got: functional.len(),
        });
    }
    let red = reduce(premise, tol);
    let k = red.basis.dim();
    let vacuous = match feasible_point(&red.rows, &red.rhs, k) {
        Feasibility::Infeasible => true,
        Feasibility::IterationCap => return Err(Error::Indeterminate),
        Feasibility::Feasible(_) => false,
    };
    let f_red = DVector::from_fn(k, |j, _| red.basis.vectors[j].dot(functional));
    let mut rows = red.rows.clone();
    let mut rhs = red.rhs.clone();
    rows.push(f_red);
    rhs.push(1.0);
    match feasible_point(&rows, &rhs, k) {
        Feasibility::Feasible(y) => Ok(ImplicationVerdict {
            holds: false,
            witness: Some(lift(&red.basis, &y)),
            vacuous,
        }),
        Feasibility::Infeasible => Ok(ImplicationVerdict {
            holds: true,
            witness: None,
            vacuous,
        }),
        Feasibility::IterationCap => Err(Error::Indeterminate),
    }
}

/// `min_{gamma >= 0} ||g - gamma u||`: the norm of `g` when the ray points
/// away, otherwise the residual at the projection coefficient
/// `gamma* = <g,u>/||u||^2` (evaluated as a vector residual, which stays
/// accurate where the squared-norm form cancels).
pub fn distance_to_ray(g: &DVector<f64>, u: &DVector<f64>) -> f64 {
    let gu = g.dot(u);
    let uu = u.norm_squared();
    if uu <= 1e-300 || gu <= 0.0 {
        return g.norm();
    }
    (g - u * (gu / uu)).norm()
}
