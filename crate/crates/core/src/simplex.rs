//! Dense phase-one simplex for small feasibility systems `G y >= h` with
//! free variables.
//!
//! This is the feasibility kernel behind every cone verdict. It is kept
//! in-repo so verdicts never depend on an external solver's defaults: Bland's
//! rule, a fixed pivot tolerance, and an explicit iteration cap that reports
//! an indeterminate outcome instead of guessing.

use nalgebra::DVector;

const PIVOT_TOL: f64 = 1e-11;
const OBJ_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub enum Feasibility {
    Feasible(DVector<f64>),
    Infeasible,
    /// The iteration cap was exceeded; no verdict.
    IterationCap,
}

/// Decide whether some `y` in R^nvars satisfies `rows[i] . y >= rhs[i]` for
/// all i. Rows are normalized internally, so the outcome is invariant under
/// positive row scaling.
pub fn feasible_point(rows: &[DVector<f64>], rhs: &[f64], nvars: usize) -> Feasibility {
    assert_eq!(rows.len(), rhs.len());

    // Normalize rows; drop vacuous ones, reject contradictory zero rows.
    let mut norm_rows: Vec<DVector<f64>> = Vec::new();
    let mut norm_rhs: Vec<f64> = Vec::new();
    for (row, &r) in rows.iter().zip(rhs) {
        assert_eq!(row.len(), nvars);
        let scale = row.norm();
        if scale <= 1e-300 {
            if r > OBJ_TOL {
                return Feasibility::Infeasible;
            }
            continue;
        }
        norm_rows.push(row / scale);
        norm_rhs.push(r / scale);
    }
    let m = norm_rows.len();
    if nvars == 0 || m == 0 {
        return if norm_rhs.iter().all(|&r| r <= OBJ_TOL) {
            Feasibility::Feasible(DVector::zeros(nvars))
        } else {
            Feasibility::Infeasible
        };
    }

    // Standard form: y = p - q with p, q >= 0 and slack s >= 0:
    //   [G, -G, -I] [p; q; s] = rhs.
    // Rows are flipped so the right-hand side is nonnegative, then artificial
    // variables complete an identity basis for the phase-one objective.
    let ncols = 2 * nvars + m;
    let total = ncols + m;
    let mut tableau = vec![vec![0.0f64; total + 1]; m];
    for (i, row) in norm_rows.iter().enumerate() {
        let flip = if norm_rhs[i] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..nvars {
            tableau[i][j] = flip * row[j];
            tableau[i][nvars + j] = -flip * row[j];
        }
        tableau[i][2 * nvars + i] = -flip;
        tableau[i][ncols + i] = 1.0;
        tableau[i][total] = flip * norm_rhs[i];
    }
    let mut basis: Vec<usize> = (ncols..total).collect();

    // Phase-one objective row: sum of constraint rows over non-artificial
    // columns; value = sum of the right-hand sides.
    let mut obj = vec![0.0f64; total + 1];
    for row in &tableau {
        for j in 0..=total {
            obj[j] += row[j];
        }
    }
    for o in obj.iter_mut().take(total).skip(ncols) {
        *o = 0.0;
    }

    let cap = 10 * (total + m);
    for _ in 0..cap {
        if obj[total] <= OBJ_TOL {
            return Feasibility::Feasible(extract(&tableau, &basis, nvars, total));
        }
        // Bland: entering column = smallest index with positive reduced cost.
        let Some(enter) = (0..total).find(|&j| obj[j] > PIVOT_TOL) else {
            return Feasibility::Infeasible;
        };
        // Ratio test, ties broken by smallest basis variable (Bland).
        let mut leave: Option<usize> = None;
        let mut best = f64::INFINITY;
        for i in 0..m {
            let a = tableau[i][enter];
            if a > PIVOT_TOL {
                let ratio = tableau[i][total] / a;
                if ratio < best - PIVOT_TOL
                    || (ratio < best + PIVOT_TOL
                        && leave.is_none_or(|l| basis[i] < basis[l]))
                {
                    best = ratio;
                    leave = Some(i);
                }
            }
        }
        let Some(leave) = leave else {
            // Unbounded phase-one objective cannot happen (bounded below by 0);
            // reaching here means numerical trouble.
            return Feasibility::IterationCap;
        };
        pivot(&mut tableau, &mut obj, leave, enter, total);
        basis[leave] = enter;
    }
    Feasibility::IterationCap
}

fn pivot(tableau: &mut [Vec<f64>], obj: &mut [f64], row: usize, col: usize, total: usize) {
    let p = tableau[row][col];
    for v in tableau[row].iter_mut().take(total + 1) {
        *v /= p;
    }
    let pivot_row = tableau[row].clone();
    for (i, r) in tableau.iter_mut().enumerate() {
        if i != row {
            let f = r[col];
            if f != 0.0 {
                for (v, p) in r.iter_mut().zip(&pivot_row) {
                    *v -= f * p;
                }
            }
        }
    }
    let f = obj[col];
    if f != 0.0 {
        for (v, p) in obj.iter_mut().zip(&pivot_row) {
            *v -= f * p;
        }
    }
}

fn extract(tableau: &[Vec<f64>], basis: &[usize], nvars: usize, total: usize) -> DVector<f64> {
    let mut y = DVector::zeros(nvars);
    for (i, &b) in basis.iter().enumerate() {
        let v = tableau[i][total];
        if b < nvars {
            y[b] += v;
        } else if b < 2 * nvars {
            y[b - nvars] -= v;
        }
    }
    y
}
