//! Monte-Carlo verification of the Robinson inequality and the Lipschitz-like
//! inclusion on a neighborhood of a reference pair, with the oracle solver as
//! ground truth.
//!
//! Samples are independent and drawn from per-index counter-based streams, so
//! runs are bit-reproducible, prefix-stable in the sample count, and identical
//! under sequential or parallel execution. The divergence probe replays the
//! same unit directions at a tenth of the radius (common random numbers) and
//! flags growth of the worst ratio by at least half the shrink factor.

use nalgebra::{DMatrix, DVector};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cone::distance_to_ray;
use crate::error::{Error, Result};
use crate::oracle::{
    distance_to_stationary_set, project_onto_family, stationary_set, GridOptions, StationarySet,
};
use crate::parallel::{map_indexed, ExecMode};
use crate::problem::{evaluate, qp_snapshot, QpInstance};
use crate::stationarity;
use crate::tolerance::TolerancePolicy;

/// Which parameter components a perturbation touches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PerturbScheme {
    /// All of (D, c, A, b, alpha).
    Full,
    /// c only.
    Tilt,
    /// (c, b, alpha).
    Rhs,
}

#[derive(Debug, Clone)]
pub struct SamplingConfig {
    pub radius_x: f64,
    pub radius_w: f64,
    pub samples: usize,
    /// Residual filter; `None` uses 0.1 * (1 + ||grad f0(x_bar)||).
    pub gamma_cap: Option<f64>,
    pub seed: u64,
    pub scheme: PerturbScheme,
    /// Multiplier horizon for the best-effort oracle on non-trust-region
    /// samples; `None` uses the oracle default.
    pub lambda_max: Option<f64>,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        SamplingConfig {
            radius_x: 1e-2,
            radius_w: 1e-2,
            samples: 200,
            gamma_cap: None,
            seed: 42,
            scheme: PerturbScheme::Tilt,
            lambda_max: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SkipReason {
    Kept,
    Infeasible,
    GammaCap,
    ZeroResidual,
    EmptyOracle,
    NoMembers,
    ZeroWDistance,
}

impl SkipReason {
    pub fn as_str(self) -> &'static str {
        match self {
            SkipReason::Kept => "",
            SkipReason::Infeasible => "infeasible",
            SkipReason::GammaCap => "gamma_cap",
            SkipReason::ZeroResidual => "zero_residual",
            SkipReason::EmptyOracle => "empty_oracle",
            SkipReason::NoMembers => "no_members",
            SkipReason::ZeroWDistance => "zero_w_distance",
        }
    }
}

/// One sample of an empirical run.
#[derive(Debug, Clone, Serialize)]
pub struct SampleRecord {
    pub index: usize,
    /// Parameter-space distance (sum norm over blocks).
    pub w_dist: f64,
    /// Distance to the stationary set (the ratio numerator).
    pub x_dist: f64,
    /// Stationarity residual (the Robinson ratio denominator).
    pub residual: f64,
    pub ratio: f64,
    pub skip: SkipReason,
    /// The oracle was not certified complete for this sample; the ratio is
    /// recorded but excluded from the maximum.
    pub unreliable: bool,
}

impl SampleRecord {
    fn skipped(index: usize, w_dist: f64, reason: SkipReason) -> Self {
        SampleRecord {
            index,
            w_dist,
            x_dist: f64::NAN,
            residual: f64::NAN,
            ratio: f64::NAN,
            skip: reason,
            unreliable: false,
        }
    }

    pub fn kept(&self) -> bool {
        self.skip == SkipReason::Kept && !self.unreliable
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct SummaryStats {
    pub count: usize,
    pub min: f64,
    pub mean: f64,
    pub p50: f64,
    pub p90: f64,
    pub max: f64,
}

impl SummaryStats {
    fn from_ratios(mut ratios: Vec<f64>) -> Self {
        if ratios.is_empty() {
            return SummaryStats::default();
        }
        ratios.sort_by(f64::total_cmp);
        let count = ratios.len();
        let q = |p: f64| ratios[((p * (count - 1) as f64).round() as usize).min(count - 1)];
        SummaryStats {
            count,
            min: ratios[0],
            mean: ratios.iter().sum::<f64>() / count as f64,
            p50: q(0.5),
            p90: q(0.9),
            max: ratios[count - 1],
        }
    }
}

/// Aggregated outcome of an empirical run.
#[derive(Debug, Clone)]
pub struct EmpiricalEstimate {
    pub max_ratio: f64,
    pub shrunk_max_ratio: f64,
    pub ratios: SummaryStats,
    pub skipped: usize,
    pub unreliable: usize,
    pub witness_worst: Option<SampleRecord>,
    pub divergence_flag: bool,
    /// Base-run records, one per sample, in index order.
    pub records: Vec<SampleRecord>,
}

/// Growth of the worst ratio that flags divergence when the radius shrinks
/// by 10 (half the shrink factor; a bounded modulus stays near 1, a
/// divergent one reaches 10 from below).
const DIVERGENCE_GROWTH: f64 = 5.0;

fn sum_norm_distance(a: &QpInstance, b: &QpInstance) -> f64 {
    (&a.obj_quad - &b.obj_quad).norm()
        + (&a.obj_lin - &b.obj_lin).norm()
        + (&a.con_quad - &b.con_quad).norm()
        + (&a.con_lin - &b.con_lin).norm()
        + (a.con_const - b.con_const).abs()
}

fn sym_gaussian(rng: &mut impl Rng, n: usize) -> DMatrix<f64> {
    let raw = DMatrix::from_fn(n, n, |_, _| {
        rng.sample::<f64, _>(rand_distr::StandardNormal)
    });
    (&raw + raw.transpose()) * 0.5
}

fn gaussian_vec(rng: &mut impl Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.sample::<f64, _>(rand_distr::StandardNormal))
}

/// Add a uniformly sampled perturbation of total sum norm at most `radius_w`
/// to the scheme-selected components. Symmetric matrices are perturbed
/// symmetrically. Deterministic in the RNG state.
pub fn perturb(
    instance: &QpInstance,
    scheme: PerturbScheme,
    radius_w: f64,
    rng: &mut impl Rng,
) -> QpInstance {
    let n = instance.dim;
    let sym_dof = n * (n + 1) / 2;
    let (dd, da, db, dalpha, dof) = match scheme {
        PerturbScheme::Full => (
            Some(sym_gaussian(rng, n)),
            Some(sym_gaussian(rng, n)),
            Some(gaussian_vec(rng, n)),
            Some(rng.sample::<f64, _>(rand_distr::StandardNormal)),
            2 * sym_dof + 2 * n + 1,
        ),
        PerturbScheme::Tilt => (None, None, None, None, n),
        PerturbScheme::Rhs => (
            None,
            None,
            Some(gaussian_vec(rng, n)),
            Some(rng.sample::<f64, _>(rand_distr::StandardNormal)),
            2 * n + 1,
        ),
    };
    let dc = gaussian_vec(rng, n);
    let u: f64 = rng.gen();

    let mut total = dc.norm();
    if let Some(m) = &dd {
        total += m.norm();
    }
    if let Some(m) = &da {
        total += m.norm();
    }
    if let Some(v) = &db {
        total += v.norm();
    }
    if let Some(s) = dalpha {
        total += s.abs();
    }
    if total <= 1e-300 || radius_w == 0.0 {
        return instance.clone();
    }
    let scale = radius_w * u.powf(1.0 / dof as f64) / total;

    let mut out = instance.clone();
    out.obj_lin += &dc * scale;
    if let Some(m) = dd {
        out.obj_quad += m * scale;
    }
    if let Some(m) = da {
        out.con_quad += m * scale;
    }
    if let Some(v) = db {
        out.con_lin += v * scale;
    }
    if let Some(s) = dalpha {
        out.con_const += s * scale;
    }
    out
}

fn sample_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64 + 1);
    rng
}

fn ball_point(rng: &mut impl Rng, center: &DVector<f64>, radius: f64) -> DVector<f64> {
    let n = center.len();
    let dir = gaussian_vec(rng, n);
    let u: f64 = rng.gen();
    let norm = dir.norm();
    if norm <= 1e-300 || radius == 0.0 {
        return center.clone();
    }
    center + dir * (radius * u.powf(1.0 / n as f64) / norm)
}

/// Newton projection of `x` onto the boundary `{F(., w) = 0}` along the
/// constraint gradient. Returns `None` on stall or runaway.
fn project_to_boundary(
    inst: &QpInstance,
    x: &DVector<f64>,
    travel_cap: f64,
) -> Option<DVector<f64>> {
    let target = 1e-12 * (1.0 + inst.con_const.abs());
    let mut cur = x.clone();
    for _ in 0..50 {
        let e = evaluate(inst, &cur).ok()?;
        if e.constraint.abs() <= target {
            if (&cur - x).norm() > travel_cap {
                return None;
            }
            return Some(cur);
        }
        let g2 = e.grad_con.norm_squared();
        if g2 <= 1e-300 {
            return None;
        }
        cur -= &e.grad_con * (e.constraint / g2);
        if (&cur - x).norm() > 1e6 * (1.0 + travel_cap) {
            return None;
        }
    }
    None
}

fn check_reference(
    instance: &QpInstance,
    x_bar: &DVector<f64>,
    tol: &TolerancePolicy,
) -> Result<f64> {
    let s = qp_snapshot(instance, x_bar)?;
    if !stationarity::check_mfcq(&s, tol) {
        return Err(Error::MfcqViolated);
    }
    let residual = stationarity::stationarity_residual(&s, tol)?;
    if residual > tol.check * (1.0 + s.grad_obj.norm()) {
        return Err(Error::NotStationary { residual });
    }
    Ok(s.grad_obj.norm())
}

fn validate(cfg: &SamplingConfig) -> Result<()> {
    if cfg.samples == 0 {
        return Err(Error::InvalidConfig("samples must be at least 1".into()));
    }
    if cfg.radius_x < 0.0 || cfg.radius_w < 0.0 {
        return Err(Error::InvalidConfig("radii must be nonnegative".into()));
    }
    Ok(())
}

fn aggregate(base: Vec<SampleRecord>, shrunk: Vec<SampleRecord>) -> EmpiricalEstimate {
    let kept: Vec<f64> = base.iter().filter(|r| r.kept()).map(|r| r.ratio).collect();
    let max_ratio = kept.iter().cloned().fold(0.0f64, f64::max);
    let shrunk_max = shrunk
        .iter()
        .filter(|r| r.kept())
        .map(|r| r.ratio)
        .fold(0.0f64, f64::max);
    let witness_worst = base
        .iter()
        .filter(|r| r.kept())
        .max_by(|a, b| a.ratio.total_cmp(&b.ratio))
        .cloned();
    let divergence_flag = max_ratio > 0.0 && shrunk_max >= DIVERGENCE_GROWTH * max_ratio;
    EmpiricalEstimate {
        max_ratio,
        shrunk_max_ratio: shrunk_max,
        ratios: SummaryStats::from_ratios(kept),
        skipped: base.iter().filter(|r| r.skip != SkipReason::Kept).count(),
        unreliable: base
            .iter()
            .filter(|r| r.skip == SkipReason::Kept && r.unreliable)
            .count(),
        witness_worst,
        divergence_flag,
        records: base,
    }
}

fn oracle_opts(cfg: &SamplingConfig) -> GridOptions {
    // The sample loop is the parallel axis; nested parallelism in the oracle
    // would only oversubscribe the pool.
    GridOptions {
        exec: ExecMode::Sequential,
        lambda_max: cfg.lambda_max,
        ..GridOptions::default()
    }
}

/// Empirical check of the Robinson inequality `d(x, S(w)) <= r d(0, F(x, w))`
/// on random parameter/point pairs near the reference.
pub fn verify_robinson_with_mode(
    instance: &QpInstance,
    x_bar: &DVector<f64>,
    cfg: &SamplingConfig,
    tol: &TolerancePolicy,
    exec: ExecMode,
) -> Result<EmpiricalEstimate> {
    validate(cfg)?;
    let grad_scale = check_reference(instance, x_bar, tol)?;
    let gamma_cap = cfg.gamma_cap.unwrap_or(0.1 * (1.0 + grad_scale));

    let eval_sample = |index: usize, radius_x: f64, radius_w: f64| -> SampleRecord {
        let mut rng = sample_rng(cfg.seed, index);
        let w = perturb(instance, cfg.scheme, radius_w, &mut rng);
        let x_raw = ball_point(&mut rng, x_bar, radius_x);
        let w_dist = sum_norm_distance(&w, instance);
        let act = tol.activity * (1.0 + w.con_const.abs());

        let e = match evaluate(&w, &x_raw) {
            Ok(e) => e,
            Err(_) => return SampleRecord::skipped(index, w_dist, SkipReason::Infeasible),
        };
        let (x_use, residual) = if e.constraint < -act {
            (x_raw, e.grad_obj.norm())
        } else {
            // On or beyond the boundary: project onto the active set so the
            // sample satisfies the definition's active-case residual exactly.
            let travel_cap = 4.0 * radius_x + 2.0 * radius_w + 1e-6;
            match project_to_boundary(&w, &x_raw, travel_cap) {
                Some(xp) => {
                    let ep = evaluate(&w, &xp).expect("dimension checked");
                    if ep.grad_con.norm() <= tol.check {
                        return SampleRecord::skipped(index, w_dist, SkipReason::Infeasible);
                    }
                    let rho = distance_to_ray(&(-&ep.grad_obj), &ep.grad_con);
                    (xp, rho)
                }
                None => return SampleRecord::skipped(index, w_dist, SkipReason::Infeasible),
            }
        };
        if residual >= gamma_cap {
            return SampleRecord::skipped(index, w_dist, SkipReason::GammaCap);
        }
        if residual <= 1e-14 {
            return SampleRecord::skipped(index, w_dist, SkipReason::ZeroResidual);
        }
        let set = stationary_set(&w, &oracle_opts(cfg), tol);
        if set.is_empty() {
            return SampleRecord::skipped(index, w_dist, SkipReason::EmptyOracle);
        }
        let x_dist = distance_to_stationary_set(&x_use, &set);
        if !x_dist.is_finite() {
            return SampleRecord::skipped(index, w_dist, SkipReason::EmptyOracle);
        }
        SampleRecord {
            index,
            w_dist,
            x_dist,
            residual,
            ratio: x_dist / residual,
            skip: SkipReason::Kept,
            unreliable: !set.complete,
        }
    };

    let base = map_indexed(exec, cfg.samples, |i| {
        eval_sample(i, cfg.radius_x, cfg.radius_w)
    });
    let shrunk = map_indexed(exec, cfg.samples, |i| {
        eval_sample(i, cfg.radius_x / 10.0, cfg.radius_w / 10.0)
    });
    Ok(aggregate(base, shrunk))
}

pub fn verify_robinson(
    instance: &QpInstance,
    x_bar: &DVector<f64>,
    cfg: &SamplingConfig,
    tol: &TolerancePolicy,
) -> Result<EmpiricalEstimate> {
    verify_robinson_with_mode(instance, x_bar, cfg, tol, ExecMode::default())
}

fn members_in_ball(set: &StationarySet, x_bar: &DVector<f64>, radius: f64) -> Vec<DVector<f64>> {
    let mut out: Vec<DVector<f64>> = set
        .points
        .iter()
        .filter(|p| (&p.x - x_bar).norm() <= radius)
        .map(|p| p.x.clone())
        .collect();
    for fam in &set.families {
        let p = project_onto_family(fam, x_bar);
        if (&p - x_bar).norm() <= radius {
            out.push(p);
        }
    }
    out
}

/// Empirical check of the Lipschitz-like inclusion
/// `S(w') ∩ B(x_bar, r) ⊂ S(w) + l ||w' - w|| B`.
pub fn verify_lipschitz_like_with_mode(
    instance: &QpInstance,
    x_bar: &DVector<f64>,
    cfg: &SamplingConfig,
    tol: &TolerancePolicy,
    exec: ExecMode,
) -> Result<EmpiricalEstimate> {
    validate(cfg)?;
    check_reference(instance, x_bar, tol)?;

    let eval_sample = |index: usize, radius_x: f64, radius_w: f64| -> SampleRecord {
        let mut rng = sample_rng(cfg.seed, index);
        let w1 = perturb(instance, cfg.scheme, radius_w, &mut rng);
        let w2 = perturb(instance, cfg.scheme, radius_w, &mut rng);
        let w_dist = sum_norm_distance(&w1, &w2);
        if w_dist <= 1e-14 {
            return SampleRecord::skipped(index, w_dist, SkipReason::ZeroWDistance);
        }
        let opts = oracle_opts(cfg);
        let set2 = stationary_set(&w2, &opts, tol);
        let members = members_in_ball(&set2, x_bar, radius_x);
        if members.is_empty() {
            return SampleRecord::skipped(index, w_dist, SkipReason::NoMembers);
        }
        let set1 = stationary_set(&w1, &opts, tol);
        if set1.is_empty() {
            return SampleRecord::skipped(index, w_dist, SkipReason::EmptyOracle);
        }
        let worst = members
            .iter()
            .map(|m| distance_to_stationary_set(m, &set1))
            .fold(0.0f64, f64::max);
        if !worst.is_finite() {
            return SampleRecord::skipped(index, w_dist, SkipReason::EmptyOracle);
        }
        SampleRecord {
            index,
            w_dist,
            x_dist: worst,
            residual: f64::NAN,
            ratio: worst / w_dist,
            skip: SkipReason::Kept,
            unreliable: !(set1.complete && set2.complete),
        }
    };

    let base = map_indexed(exec, cfg.samples, |i| {
        eval_sample(i, cfg.radius_x, cfg.radius_w)
    });
    // Only the parameter radius shrinks: the x-window must keep catching
    // members of the perturbed stationary sets.
    let shrunk = map_indexed(exec, cfg.samples, |i| {
        eval_sample(i, cfg.radius_x, cfg.radius_w / 10.0)
    });
    Ok(aggregate(base, shrunk))
}

pub fn verify_lipschitz_like(
    instance: &QpInstance,
    x_bar: &DVector<f64>,
    cfg: &SamplingConfig,
    tol: &TolerancePolicy,
) -> Result<EmpiricalEstimate> {
    verify_lipschitz_like_with_mode(instance, x_bar, cfg, tol, ExecMode::default())
}

/// CSV rows, one per sample: floats carry 17 significant digits.
pub fn write_csv<W: std::io::Write>(
    out: &mut W,
    records: &[SampleRecord],
) -> std::io::Result<()> {
    writeln!(out, "index,w_dist,x_dist,residual,ratio,skip_reason")?;
    for r in records {
        writeln!(
            out,
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{}",
            r.index,
            r.w_dist,
            r.x_dist,
            r.residual,
            r.ratio,
            if r.unreliable && r.skip == SkipReason::Kept {
                "unreliable_oracle"
            } else {
                r.skip.as_str()
            }
        )?;
    }
    Ok(())
}
