//! Brute-force enumeration of the stationary set of a QP instance, the
//! ground truth for the empirical verifier and round-trip tests.
//!
//! Interior points come from the linear system `Dx = -c`. Boundary points of
//! trust-region-shaped instances (A = I, b = 0, alpha < 0) are enumerated
//! exhaustively through the secular equation in the eigenbasis of D,
//! including hard-case sphere-slice families. General instances fall back to
//! a best-effort multiplier grid scan.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::parallel::{map_indexed, ExecMode};
use crate::problem::{evaluate, QpInstance};
use crate::tolerance::TolerancePolicy;

/// Relative threshold below which a gradient coefficient counts as an exact
/// zero for hard-case detection.
const HARD_CASE_REL: f64 = 1e-11;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointKind {
    Interior,
    Boundary,
}

#[derive(Debug, Clone)]
pub struct StationaryPoint {
    pub x: DVector<f64>,
    pub lambda: f64,
    pub kind: PointKind,
    pub isolated: bool,
    pub kkt_residual: f64,
}

/// A connected continuum of stationary points.
#[derive(Debug, Clone)]
pub enum Family {
    /// Affine set `base + span(basis)` of interior stationary points.
    Affine {
        base: DVector<f64>,
        basis: Vec<DVector<f64>>,
    },
    /// Sphere slice `center + radius * (unit sphere of span(basis))` of
    /// boundary stationary points sharing one multiplier.
    SphereSlice {
        center: DVector<f64>,
        radius: f64,
        basis: Vec<DVector<f64>>,
        lambda: f64,
    },
}

#[derive(Debug, Clone)]
pub struct StationarySet {
    pub points: Vec<StationaryPoint>,
    pub families: Vec<Family>,
    /// The enumeration is certified exhaustive (interior solve and
    /// trust-region secular modes only).
    pub complete: bool,
}

impl StationarySet {
    pub fn is_empty(&self) -> bool {
        self.points.is_empty() && self.families.is_empty()
    }
}

/// Options for the general boundary grid scan.
#[derive(Debug, Clone)]
pub struct GridOptions {
    pub grid_size: usize,
    pub refine_iters: usize,
    pub lambda_max: Option<f64>,
    pub exec: ExecMode,
}

impl Default for GridOptions {
    fn default() -> Self {
        GridOptions {
            grid_size: 4096,
            refine_iters: 80,
            lambda_max: None,
            exec: ExecMode::default(),
        }
    }
}

fn boundary_residual(inst: &QpInstance, x: &DVector<f64>, lambda: f64) -> f64 {
    let e = evaluate(inst, x).expect("dimension checked");
    (e.grad_obj + e.grad_con * lambda).norm() + e.constraint.abs()
}

/// Interior stationary points: solutions of `Dx = -c` strictly inside the
/// constraint set. A singular consistent system yields an affine family.
pub fn solve_interior(
    inst: &QpInstance,
    tol: &TolerancePolicy,
) -> (Vec<StationaryPoint>, Vec<Family>) {
    let n = inst.dim;
    let act = tol.activity * (1.0 + inst.con_const.abs());
    let rhs = -&inst.obj_lin;
    let svd = inst.obj_quad.clone().svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
    let smin = svd
        .singular_values
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    let tau = tol.rank_threshold(n, n, smax);

    let keep_interior = |x: &DVector<f64>| -> Option<StationaryPoint> {
        let e = evaluate(inst, x).expect("dimension checked");
        if e.constraint < -act {
            Some(StationaryPoint {
                x: x.clone(),
                lambda: 0.0,
                kind: PointKind::Interior,
                isolated: true,
                kkt_residual: e.grad_obj.norm(),
            })
        } else {
            None
        }
    };

    if smin > tau {
        let x = inst
            .obj_quad
            .clone()
            .lu()
            .solve(&rhs)
            .expect("nonsingular system");
        return (keep_interior(&x).into_iter().collect(), vec![]);
    }

    // Singular: minimal-norm solution, consistency decides existence.
    let x0 = svd.solve(&rhs, tau).expect("svd solve");
    let residual = (&inst.obj_quad * &x0 - &rhs).norm();
    if residual > tol.check * (1.0 + rhs.norm()) {
        return (vec![], vec![]);
    }
    let kernel = crate::cone::kernel_basis(&inst.obj_quad, tol);
    let mut points = Vec::new();
    if let Some(mut p) = keep_interior(&x0) {
        p.isolated = false;
        points.push(p);
    }
    let families = vec![Family::Affine {
        base: x0,
        basis: kernel.vectors,
    }];
    (points, families)
}

/// Is this instance trust-region shaped (A = I, b = 0, alpha < 0)?
pub fn is_trs(inst: &QpInstance, tol: &TolerancePolicy) -> bool {
    let eye = DMatrix::<f64>::identity(inst.dim, inst.dim);
    (&inst.con_quad - eye).norm() <= tol.check * (inst.dim as f64)
        && inst.con_lin.norm() <= tol.check
        && inst.con_const < 0.0
}

/// Eigenvalues grouped by equal value, with the grouped squared gradient mass.
struct EigenGroups {
    values: Vec<f64>,
    members: Vec<Vec<usize>>,
    c_sq: Vec<f64>,
}

fn group_eigenvalues(vals: &[f64], c: &DVector<f64>, tol_group: f64) -> EigenGroups {
    let mut values = Vec::new();
    let mut members: Vec<Vec<usize>> = Vec::new();
    let mut c_sq = Vec::new();
    for (i, &v) in vals.iter().enumerate() {
        if let Some(g) = values.iter().position(|&gv: &f64| (gv - v).abs() <= tol_group) {
            members[g].push(i);
            c_sq[g] += c[i] * c[i];
        } else {
            values.push(v);
            members.push(vec![i]);
            c_sq.push(c[i] * c[i]);
        }
    }
    EigenGroups {
        values,
        members,
        c_sq,
    }
}

/// Exhaustive boundary enumeration for trust-region instances via the
/// secular equation `sum_i c_i^2 / (lambda + d_i)^2 = -2 alpha`.
pub fn solve_trs_boundary(
    inst: &QpInstance,
    tol: &TolerancePolicy,
) -> Result<(Vec<StationaryPoint>, Vec<Family>)> {
    if !is_trs(inst, tol) {
        return Err(Error::NotTrs);
    }
    let n = inst.dim;
    let r_sq = -2.0 * inst.con_const;
    let eig = nalgebra::SymmetricEigen::new(inst.obj_quad.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let q = {
        let mut q = DMatrix::zeros(n, n);
        for (new, &old) in order.iter().enumerate() {
            q.set_column(new, &eig.eigenvectors.column(old));
        }
        q
    };
    let mut c_rot = q.transpose() * &inst.obj_lin;
    let c_norm = inst.obj_lin.norm();
    for i in 0..n {
        if c_rot[i].abs() <= HARD_CASE_REL * c_norm {
            c_rot[i] = 0.0;
        }
    }
    let scale = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let groups = group_eigenvalues(&vals, &c_rot, 1e-9 * (1.0 + scale));

    let phi = |lam: f64| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            if c_rot[i] != 0.0 {
                let d = lam + vals[i];
                s += c_rot[i] * c_rot[i] / (d * d);
            }
        }
        s - r_sq
    };
    let dphi = |lam: f64| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            if c_rot[i] != 0.0 {
                let d = lam + vals[i];
                s += -2.0 * c_rot[i] * c_rot[i] / (d * d * d);
            }
        }
        s
    };

    // Poles of phi on [0, inf).
    let mut poles: Vec<f64> = groups
        .values
        .iter()
        .zip(&groups.c_sq)
        .filter(|(_, &cs)| cs > 0.0)
        .map(|(&v, _)| -v)
        .filter(|&p| p >= 0.0)
        .collect();
    poles.sort_by(f64::total_cmp);

    let tol_phi = 1e-13 * r_sq.max(1.0);
    let mut roots: Vec<f64> = Vec::new();

    // Walk from `from` toward `pole`, halving the distance until `pred`
    // holds. phi and its derivative both diverge at the pole, so the walk
    // terminates for the predicates used below.
    let walk_to_pole = |pole: f64, from: f64, pred: &dyn Fn(f64) -> bool| -> Option<f64> {
        let mut t = from;
        for _ in 0..2000 {
            if pred(t) {
                return Some(t);
            }
            t = pole + (t - pole) * 0.5;
            if (t - pole).abs() < 1e-300 || t == pole {
                return None;
            }
        }
        None
    };

    let bisect_root = |mut lo: f64, mut hi: f64| -> f64 {
        // Assumes a sign change on [lo, hi].
        let mut flo = phi(lo);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let fm = phi(mid);
            if fm.abs() <= tol_phi || (hi - lo) <= 1e-16 * (1.0 + mid.abs()) {
                return mid;
            }
            if (fm > 0.0) == (flo > 0.0) {
                lo = mid;
                flo = fm;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };

    // One interval between consecutive poles (or the closed end at 0 and the
    // unbounded tail). phi is convex here: find the minimizer through the
    // monotone derivative first, then bracket at most one root per branch by
    // walking from the minimizer toward each pole, where phi -> +inf. phi is
    // monotone on each branch, so the first positive sample is a valid
    // bracket endpoint and no root can be skipped.
    let mut scan_interval = |lo: f64, lo_is_pole: bool, hi: Option<f64>| {
        let far_right = match hi {
            Some(h) => h,
            None => {
                let mut b = lo.abs().max(scale).max(1.0) * 2.0 + lo + 1.0;
                for _ in 0..200 {
                    if phi(b) < 0.0 {
                        break;
                    }
                    b *= 2.0;
                }
                b
            }
        };
        let a_d = if lo_is_pole {
            match walk_to_pole(lo, 0.5 * (lo + far_right), &|t| dphi(t) < 0.0) {
                Some(t) => t,
                None => return,
            }
        } else {
            lo
        };
        let b_d = match hi {
            Some(h) => match walk_to_pole(h, 0.5 * (a_d + h), &|t| dphi(t) > 0.0) {
                Some(t) => t,
                None => return,
            },
            None => far_right,
        };
        if a_d >= b_d {
            return;
        }
        let m = if dphi(a_d) >= 0.0 {
            a_d
        } else if dphi(b_d) <= 0.0 {
            b_d
        } else {
            let (mut l, mut r) = (a_d, b_d);
            for _ in 0..200 {
                let mid = 0.5 * (l + r);
                if dphi(mid) < 0.0 {
                    l = mid;
                } else {
                    r = mid;
                }
                if r - l <= 1e-16 * (1.0 + mid.abs()) {
                    break;
                }
            }
            0.5 * (l + r)
        };
        let fm = phi(m);
        if fm.abs() <= tol_phi {
            roots.push(m);
        }
        // Left branch: phi decreases from the left end down to phi(m).
        if fm < -tol_phi {
            if lo_is_pole {
                if let Some(a) = walk_to_pole(lo, m, &|t| phi(t) > 0.0) {
                    roots.push(bisect_root(a, m));
                }
            } else {
                let fl = phi(lo);
                if fl.abs() <= tol_phi {
                    roots.push(lo);
                } else if fl > tol_phi {
                    roots.push(bisect_root(lo, m));
                }
            }
        } else if !lo_is_pole && phi(lo).abs() <= tol_phi {
            roots.push(lo);
        }
        // Right branch: phi increases from phi(m) toward the right pole. The
        // unbounded tail decreases to a negative limit, so it has no branch
        // of its own.
        if fm < -tol_phi {
            if let Some(h) = hi {
                if let Some(b) = walk_to_pole(h, m, &|t| phi(t) > 0.0) {
                    roots.push(bisect_root(m, b));
                }
            }
        }
    };

    if poles.is_empty() {
        scan_interval(0.0, false, None);
    } else {
        if poles[0] > 0.0 {
            scan_interval(0.0, false, Some(poles[0]));
        }
        for w in poles.windows(2) {
            scan_interval(w[0], true, Some(w[1]));
        }
        scan_interval(*poles.last().unwrap(), true, None);
    }

    let mut points: Vec<StationaryPoint> = Vec::new();
    let mut families: Vec<Family> = Vec::new();

    let y_at = |lam: f64| -> DVector<f64> {
        DVector::from_fn(n, |i, _| {
            if c_rot[i] == 0.0 {
                0.0
            } else {
                -c_rot[i] / (lam + vals[i])
            }
        })
    };

    for &lam in &roots {
        let lam = if lam.abs() <= 1e-12 { 0.0 } else { lam };
        if lam < 0.0 {
            continue;
        }
        let mut y = y_at(lam);
        // Repair the norm through the dominant component. Near a pole the
        // secular slope exceeds what double precision can polish, so the
        // remaining radial error is absorbed where (lam + d_i) is smallest
        // and the gradient equation barely notices.
        if let Some(imax) = (0..n)
            .filter(|&i| c_rot[i] != 0.0)
            .max_by(|&a, &b| y[a].abs().total_cmp(&y[b].abs()))
        {
            let rest: f64 = (0..n).filter(|&i| i != imax).map(|i| y[i] * y[i]).sum();
            let rem = r_sq - rest;
            if rem > 0.0 {
                y[imax] = y[imax].signum() * rem.sqrt();
            }
        }
        let x = &q * y;
        let res = boundary_residual(inst, &x, lam);
        if res <= 1e-9 * (1.0 + c_norm + r_sq) {
            points.push(StationaryPoint {
                x,
                lambda: lam,
                kind: PointKind::Boundary,
                isolated: true,
                kkt_residual: res,
            });
        }
    }

    // Hard case: eigenvalue groups with zero gradient mass and nonpositive
    // value admit lambda = -value with free components in the eigenspace.
    for g in 0..groups.values.len() {
        if groups.c_sq[g] > 0.0 {
            continue;
        }
        let val = groups.values[g];
        if val > 1e-12 * (1.0 + scale) {
            continue;
        }
        let lam = (-val).max(0.0);
        let mut y_fixed = DVector::zeros(n);
        let mut ok = true;
        for i in 0..n {
            if groups.members[g].contains(&i) || c_rot[i] == 0.0 {
                continue;
            }
            let d = lam + vals[i];
            if d.abs() <= 1e-12 * (1.0 + scale) {
                ok = false;
                break;
            }
            y_fixed[i] = -c_rot[i] / d;
        }
        if !ok {
            continue;
        }
        let rem = r_sq - y_fixed.norm_squared();
        let tol_rem = 1e-10 * r_sq;
        let center = &q * &y_fixed;
        if rem > tol_rem {
            let radius = rem.sqrt();
            let basis: Vec<DVector<f64>> = groups.members[g]
                .iter()
                .map(|&i| q.column(i).into_owned())
                .collect();
            if basis.len() == 1 {
                for sign in [1.0, -1.0] {
                    let x = &center + &basis[0] * (sign * radius);
                    let res = boundary_residual(inst, &x, lam);
                    points.push(StationaryPoint {
                        x,
                        lambda: lam,
                        kind: PointKind::Boundary,
                        isolated: true,
                        kkt_residual: res,
                    });
                }
            } else {
                families.push(Family::SphereSlice {
                    center,
                    radius,
                    basis,
                    lambda: lam,
                });
            }
        } else if rem >= -tol_rem {
            let res = boundary_residual(inst, &center, lam);
            points.push(StationaryPoint {
                x: center,
                lambda: lam,
                kind: PointKind::Boundary,
                isolated: true,
                kkt_residual: res,
            });
        }
    }

    dedupe_points(&mut points, tol);
    debug_assert!(points.len() <= 2 * n, "secular structure bounds the count");
    Ok((points, families))
}

fn dedupe_points(points: &mut Vec<StationaryPoint>, _tol: &TolerancePolicy) {
    points.sort_by(|a, b| {
        a.lambda.total_cmp(&b.lambda).then_with(|| {
            for (xa, xb) in a.x.iter().zip(b.x.iter()) {
                let c = xa.total_cmp(xb);
                if c != std::cmp::Ordering::Equal {
                    return c;
                }
            }
            std::cmp::Ordering::Equal
        })
    });
    points.dedup_by(|a, b| {
        (a.lambda - b.lambda).abs() <= 1e-8 * (1.0 + b.lambda.abs())
            && (&a.x - &b.x).norm() <= 1e-8 * (1.0 + b.x.norm())
    });
}

/// Best-effort boundary enumeration for general instances: bracket sign
/// changes of `lambda -> F(x(lambda))` on a multiplier grid and refine by
/// bisection. Never certified complete.
pub fn solve_general_boundary(
    inst: &QpInstance,
    opts: &GridOptions,
    tol: &TolerancePolicy,
) -> Vec<StationaryPoint> {
    let lambda_max = opts.lambda_max.unwrap_or_else(|| {
        let con_scale = inst.con_quad.norm() + inst.con_lin.norm();
        10.0 * (1.0 + inst.obj_quad.norm() + inst.obj_lin.norm()) / con_scale.clamp(1e-12, 1.0)
    });
    let m = opts.grid_size.max(2);
    let x_of = |lam: f64| -> Option<DVector<f64>> {
        let mat = &inst.obj_quad + &inst.con_quad * lam;
        let rhs = -(&inst.obj_lin + &inst.con_lin * lam);
        let lu = mat.clone().lu();
        let x = lu.solve(&rhs)?;
        let residual = (&mat * &x - &rhs).norm();
        if residual > 1e-7 * (1.0 + rhs.norm()) {
            None
        } else {
            Some(x)
        }
    };
    let g_of = |lam: f64| -> Option<f64> {
        x_of(lam).map(|x| evaluate(inst, &x).expect("dimension checked").constraint)
    };

    let grid: Vec<Option<f64>> = map_indexed(opts.exec, m, |i| {
        g_of(lambda_max * i as f64 / (m - 1) as f64)
    });

    let act = tol.activity * (1.0 + inst.con_const.abs());
    let mut candidates: Vec<f64> = Vec::new();
    for i in 0..m - 1 {
        let (Some(gi), Some(gj)) = (grid[i], grid[i + 1]) else {
            continue;
        };
        let li = lambda_max * i as f64 / (m - 1) as f64;
        let lj = lambda_max * (i + 1) as f64 / (m - 1) as f64;
        if gi.abs() <= act {
            candidates.push(li);
            continue;
        }
        if gi.signum() == gj.signum() {
            continue;
        }
        let (mut lo, mut hi, mut glo) = (li, lj, gi);
        for _ in 0..opts.refine_iters {
            let mid = 0.5 * (lo + hi);
            let Some(gm) = g_of(mid) else { break };
            if gm.abs() <= 1e-15 * (1.0 + inst.con_const.abs()) {
                lo = mid;
                break;
            }
            if (gm > 0.0) == (glo > 0.0) {
                lo = mid;
                glo = gm;
            } else {
                hi = mid;
            }
        }
        candidates.push(0.5 * (lo + hi));
    }

    let mut points = Vec::new();
    for lam in candidates {
        let Some(x) = x_of(lam) else { continue };
        let e = evaluate(inst, &x).expect("dimension checked");
        if e.constraint.abs() > act {
            continue;
        }
        if e.grad_con.norm() <= tol.check {
            continue;
        }
        let res = boundary_residual(inst, &x, lam);
        if res <= 1e-7 * (1.0 + e.grad_obj.norm()) {
            points.push(StationaryPoint {
                x,
                lambda: lam.max(0.0),
                kind: PointKind::Boundary,
                isolated: true,
                kkt_residual: res,
            });
        }
    }
    dedupe_points(&mut points, tol);
    points
}

/// Enumerate the full stationary set: interior plus boundary, with the
/// boundary mode picked by the instance shape.
pub fn stationary_set(inst: &QpInstance, opts: &GridOptions, tol: &TolerancePolicy) -> StationarySet {
    let (mut points, mut families) = solve_interior(inst, tol);
    let complete = if is_trs(inst, tol) {
        let (mut bp, mut bf) = solve_trs_boundary(inst, tol).expect("checked trs shape");
        points.append(&mut bp);
        families.append(&mut bf);
        true
    } else {
        let mut bp = solve_general_boundary(inst, opts, tol);
        points.append(&mut bp);
        false
    };
    dedupe_points(&mut points, tol);
    StationarySet {
        points,
        families,
        complete,
    }
}

/// Closest point of a family to `x` (orthogonal projection onto the affine
/// set, or the radial projection onto the sphere slice).
pub fn project_onto_family(family: &Family, x: &DVector<f64>) -> DVector<f64> {
    match family {
        Family::Affine { base, basis } => {
            let diff = x - base;
            let mut p = base.clone();
            for b in basis {
                p += b * b.dot(&diff);
            }
            p
        }
        Family::SphereSlice {
            center,
            radius,
            basis,
            ..
        } => {
            let diff = x - center;
            let mut in_plane = DVector::zeros(x.len());
            for b in basis {
                in_plane += b * b.dot(&diff);
            }
            let norm = in_plane.norm();
            if norm <= 1e-300 {
                center + &basis[0] * *radius
            } else {
                center + in_plane * (*radius / norm)
            }
        }
    }
}

/// Euclidean distance from `x` to the set (closed-form projections onto
/// families). Returns infinity on an empty set.
pub fn distance_to_stationary_set(x: &DVector<f64>, set: &StationarySet) -> f64 {
    let mut best = f64::INFINITY;
    for p in &set.points {
        best = best.min((x - &p.x).norm());
    }
    for fam in &set.families {
        let d = match fam {
            Family::Affine { base, basis } => {
                let mut diff = x - base;
                for b in basis {
                    let t = b.dot(&diff);
                    diff -= b * t;
                }
                diff.norm()
            }
            Family::SphereSlice {
                center,
                radius,
                basis,
                ..
            } => {
                let diff = x - center;
                let mut in_plane = DVector::zeros(x.len());
                for b in basis {
                    in_plane += b * b.dot(&diff);
                }
                let perp = &diff - &in_plane;
                let along = in_plane.norm();
                (perp.norm_squared() + (along - radius) * (along - radius)).sqrt()
            }
        };
        best = best.min(d);
    }
    best
}
