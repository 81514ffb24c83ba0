//! Command-line driver: load an instance file, run classification and all
//! applicable certificates, optionally run empirical verification or a
//! parameter sweep, and emit JSON reports and CSV data.
//!
//! Exit codes: 0 clean analysis, 1 input/parse error, 2 reference point not
//! stationary, 3 constraint qualification failure.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use stabcert::certificates::general::theorem31_verdict;
use stabcert::jsonio::to_string_17;
use stabcert::oracle::{project_onto_family, stationary_set, GridOptions};
use stabcert::problem::InstanceFile;
use stabcert::report::StabilityReport;
use stabcert::stationarity;
use stabcert::verifier::{
    self, write_csv, EmpiricalEstimate, PerturbScheme, SamplingConfig, SummaryStats,
};
use stabcert::{qp_snapshot, Error, QpInstance, TolerancePolicy};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Command {
    Analyze,
    VerifyRobinson,
    VerifyLipschitz,
    Sweep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SchemeArg {
    Full,
    Tilt,
    Rhs,
}

impl From<SchemeArg> for PerturbScheme {
    fn from(s: SchemeArg) -> Self {
        match s {
            SchemeArg::Full => PerturbScheme::Full,
            SchemeArg::Tilt => PerturbScheme::Tilt,
            SchemeArg::Rhs => PerturbScheme::Rhs,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "stabcert", version, about = "Stability-certificate analyzer for parametric QPs")]
struct Args {
    /// Instance JSON file.
    #[arg(long)]
    input: PathBuf,

    #[arg(long, value_enum)]
    command: Command,

    #[arg(long, default_value_t = 42)]
    seed: u64,

    #[arg(long, default_value_t = 200)]
    samples: usize,

    #[arg(long = "radius-x", default_value_t = 1e-2)]
    radius_x: f64,

    #[arg(long = "radius-w", default_value_t = 1e-2)]
    radius_w: f64,

    #[arg(long, value_enum, default_value_t = SchemeArg::Tilt)]
    scheme: SchemeArg,

    /// Residual/activity tolerance (overrides env STABCERT_TOL).
    #[arg(long)]
    tol: Option<f64>,

    /// Absolute singular-value threshold for rank decisions (default:
    /// max(rows, cols) * eps * sigma_max).
    #[arg(long = "rank-tol")]
    rank_tol: Option<f64>,

    /// Multiplier horizon for the general boundary grid scan.
    #[arg(long = "lambda-max")]
    lambda_max: Option<f64>,

    /// Output file for the JSON report/summary (default stdout).
    #[arg(long)]
    out: Option<PathBuf>,

    /// CSV output path for verify and sweep commands.
    #[arg(long)]
    csv: Option<PathBuf>,

    /// Sweep direction: inline JSON or @path (same schema as the instance,
    /// all components optional).
    #[arg(long)]
    ray: Option<String>,

    #[arg(long, default_value_t = 11)]
    steps: usize,

    /// Sweep parameter range: t runs over [-t-range, t-range].
    #[arg(long = "t-range", default_value_t = 0.1)]
    t_range: f64,

    /// Sweep x-window around the reference point.
    #[arg(long, default_value_t = 0.5)]
    window: f64,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Failure {
            code,
            message: message.into(),
        }
    }
}

fn tolerance_from(args: &Args) -> TolerancePolicy {
    let from_env = std::env::var("STABCERT_TOL")
        .ok()
        .and_then(|v| v.parse::<f64>().ok());
    let mut policy = match args.tol.or(from_env) {
        Some(t) => TolerancePolicy::with_check(t),
        None => TolerancePolicy::default(),
    };
    policy.rank_override = args.rank_tol;
    policy
}

fn grid_options(args: &Args) -> GridOptions {
    GridOptions {
        lambda_max: args.lambda_max,
        ..GridOptions::default()
    }
}

fn emit(args: &Args, text: &str) -> Result<(), Failure> {
    match &args.out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Failure::new(1, format!("cannot write {}: {e}", path.display()))),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn load(args: &Args) -> Result<(QpInstance, DVector<f64>), Failure> {
    let text = std::fs::read_to_string(&args.input)
        .map_err(|e| Failure::new(1, format!("cannot read {}: {e}", args.input.display())))?;
    let file = InstanceFile::from_json(&text).map_err(|e| Failure::new(1, e))?;
    for w in &file.warnings {
        eprintln!("warning: {w}");
    }
    let x_bar = file
        .x_bar
        .ok_or_else(|| Failure::new(1, "instance file has no x_bar"))?;
    Ok((file.instance, x_bar))
}

fn map_analysis_error(e: Error) -> Failure {
    match e {
        Error::MfcqViolated => Failure::new(3, format!("{e}")),
        Error::NotStationary { .. }
        | Error::Infeasible { .. }
        | Error::NegativeMultiplier { .. }
        | Error::MultiplierInconsistent { .. } => Failure::new(2, format!("{e}")),
        other => Failure::new(1, format!("{other}")),
    }
}

fn analyze_report(
    instance: &QpInstance,
    x_bar: &DVector<f64>,
    tol: &TolerancePolicy,
) -> Result<StabilityReport, Failure> {
    let snapshot = qp_snapshot(instance, x_bar).map_err(map_analysis_error)?;
    if !stationarity::check_mfcq(&snapshot, tol) {
        return Err(Failure::new(3, "constraint qualification fails at x_bar"));
    }
    let residual = stationarity::stationarity_residual(&snapshot, tol).map_err(map_analysis_error)?;
    if residual > tol.check * (1.0 + snapshot.grad_obj.norm()) {
        return Err(Failure::new(
            2,
            format!("x_bar is not stationary: residual {residual:.6e}"),
        ));
    }
    let case = stationarity::classify_case(&snapshot, tol).map_err(map_analysis_error)?;
    theorem31_verdict(&snapshot, &case, tol).map_err(map_analysis_error)
}

fn cmd_analyze(args: &Args) -> Result<(), Failure> {
    let (instance, x_bar) = load(args)?;
    let tol = tolerance_from(args);
    let report = analyze_report(&instance, &x_bar, &tol)?;
    emit(args, &to_string_17(&report))
}

#[derive(Serialize)]
struct VerifySummary<'a> {
    command: &'a str,
    seed: u64,
    samples: usize,
    radius_x: f64,
    radius_w: f64,
    scheme: PerturbScheme,
    max_ratio: f64,
    shrunk_max_ratio: f64,
    divergence_flag: bool,
    kept: usize,
    skipped: usize,
    unreliable: usize,
    ratios: &'a SummaryStats,
}

fn write_estimate(
    args: &Args,
    command: &str,
    cfg: &SamplingConfig,
    est: &EmpiricalEstimate,
) -> Result<(), Failure> {
    if let Some(path) = &args.csv {
        let mut file = std::fs::File::create(path)
            .map_err(|e| Failure::new(1, format!("cannot create {}: {e}", path.display())))?;
        write_csv(&mut file, &est.records)
            .and_then(|_| file.flush())
            .map_err(|e| Failure::new(1, format!("cannot write csv: {e}")))?;
    }
    if est.unreliable > 0 {
        eprintln!(
            "warning: {} samples used a best-effort oracle and were excluded from the maximum",
            est.unreliable
        );
    }
    let summary = VerifySummary {
        command,
        seed: cfg.seed,
        samples: cfg.samples,
        radius_x: cfg.radius_x,
        radius_w: cfg.radius_w,
        scheme: cfg.scheme,
        max_ratio: est.max_ratio,
        shrunk_max_ratio: est.shrunk_max_ratio,
        divergence_flag: est.divergence_flag,
        kept: est.ratios.count,
        skipped: est.skipped,
        unreliable: est.unreliable,
        ratios: &est.ratios,
    };
    emit(args, &to_string_17(&summary))
}

fn cmd_verify(args: &Args, robinson: bool) -> Result<(), Failure> {
    let (instance, x_bar) = load(args)?;
    let tol = tolerance_from(args);
    let cfg = SamplingConfig {
        radius_x: args.radius_x,
        radius_w: args.radius_w,
        samples: args.samples,
        gamma_cap: None,
        seed: args.seed,
        scheme: args.scheme.into(),
        lambda_max: args.lambda_max,
    };
    let (command, est) = if robinson {
        (
            "verify-robinson",
            verifier::verify_robinson(&instance, &x_bar, &cfg, &tol).map_err(map_analysis_error)?,
        )
    } else {
        (
            "verify-lipschitz",
            verifier::verify_lipschitz_like(&instance, &x_bar, &cfg, &tol)
                .map_err(map_analysis_error)?,
        )
    };
    write_estimate(args, command, &cfg, &est)
}

#[derive(Debug, Default, serde::Deserialize)]
struct RayFile {
    #[serde(rename = "D", default)]
    d: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    c: Option<Vec<f64>>,
    #[serde(rename = "A", default)]
    a: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    b: Option<Vec<f64>>,
    #[serde(default)]
    alpha: Option<f64>,
}

struct Ray {
    d: DMatrix<f64>,
    c: DVector<f64>,
    a: DMatrix<f64>,
    b: DVector<f64>,
    alpha: f64,
}

fn parse_ray(spec: &str, n: usize) -> Result<Ray, Failure> {
    let text = if let Some(path) = spec.strip_prefix('@') {
        std::fs::read_to_string(path)
            .map_err(|e| Failure::new(1, format!("cannot read ray file {path}: {e}")))?
    } else {
        spec.to_string()
    };
    let raw: RayFile =
        serde_json::from_str(&text).map_err(|e| Failure::new(1, format!("ray parse error: {e}")))?;
    let mat = |rows: Option<Vec<Vec<f64>>>, name: &str| -> Result<DMatrix<f64>, Failure> {
        match rows {
            None => Ok(DMatrix::zeros(n, n)),
            Some(rows) => {
                if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                    return Err(Failure::new(1, format!("ray component {name} must be {n}x{n}")));
                }
                let flat: Vec<f64> = rows.into_iter().flatten().collect();
                let m = DMatrix::from_row_slice(n, n, &flat);
                Ok((&m + m.transpose()) * 0.5)
            }
        }
    };
    let vec = |v: Option<Vec<f64>>, name: &str| -> Result<DVector<f64>, Failure> {
        match v {
            None => Ok(DVector::zeros(n)),
            Some(v) if v.len() == n => Ok(DVector::from_vec(v)),
            Some(_) => Err(Failure::new(1, format!("ray component {name} must have length {n}"))),
        }
    };
    Ok(Ray {
        d: mat(raw.d, "D")?,
        c: vec(raw.c, "c")?,
        a: mat(raw.a, "A")?,
        b: vec(raw.b, "b")?,
        alpha: raw.alpha.unwrap_or(0.0),
    })
}

fn shifted(instance: &QpInstance, ray: &Ray, t: f64) -> QpInstance {
    let mut out = instance.clone();
    out.obj_quad += &ray.d * t;
    out.obj_lin += &ray.c * t;
    out.con_quad += &ray.a * t;
    out.con_lin += &ray.b * t;
    out.con_const += ray.alpha * t;
    out
}

fn csv_field(v: f64) -> String {
    format!("{v:.16e}")
}

fn cmd_sweep(args: &Args) -> Result<(), Failure> {
    let (instance, x_bar) = load(args)?;
    let tol = tolerance_from(args);
    let ray_spec = args
        .ray
        .as_deref()
        .ok_or_else(|| Failure::new(1, "sweep requires --ray"))?;
    if args.steps == 0 {
        return Err(Failure::new(1, "steps must be at least 1"));
    }
    let ray = parse_ray(ray_spec, instance.dim)?;

    let ts: Vec<f64> = if args.steps == 1 {
        vec![0.0]
    } else {
        (0..args.steps)
            .map(|i| -args.t_range + 2.0 * args.t_range * i as f64 / (args.steps - 1) as f64)
            .collect()
    };

    let n = instance.dim;
    let mut rows = String::new();
    rows.push_str("t,point_index,lambda,case,lipschitz_like,robinson_stable,strong_regular");
    for j in 0..n {
        rows.push_str(&format!(",x_{j}"));
    }
    rows.push('\n');

    let opts = grid_options(args);
    for &t in &ts {
        let w_t = shifted(&instance, &ray, t);
        let set = stationary_set(&w_t, &opts, &tol);
        let mut members: Vec<DVector<f64>> = set
            .points
            .iter()
            .filter(|p| (&p.x - &x_bar).norm() <= args.window)
            .map(|p| p.x.clone())
            .collect();
        for family in &set.families {
            let p = project_onto_family(family, &x_bar);
            if (&p - &x_bar).norm() <= args.window {
                members.push(p);
            }
        }
        if members.is_empty() {
            continue;
        }
        members.sort_by(|a, b| {
            for (xa, xb) in a.iter().zip(b.iter()) {
                let c = xa.total_cmp(xb);
                if c != std::cmp::Ordering::Equal {
                    return c;
                }
            }
            std::cmp::Ordering::Equal
        });
        for (k, x) in members.iter().enumerate() {
            let report = match analyze_report(&w_t, x, &tol) {
                Ok(r) => r,
                Err(_) => continue,
            };
            rows.push_str(&format!(
                "{},{},{},{:?},{},{},{}",
                csv_field(t),
                k,
                csv_field(report.case.lambda),
                report.case.tag,
                to_string_17(&report.lipschitz_like).trim_matches('"'),
                to_string_17(&report.robinson_stable).trim_matches('"'),
                to_string_17(&report.strong_regular).trim_matches('"'),
            ));
            for j in 0..n {
                rows.push(',');
                rows.push_str(&csv_field(x[j]));
            }
            rows.push('\n');
        }
    }

    match &args.csv {
        Some(path) => std::fs::write(path, rows)
            .map_err(|e| Failure::new(1, format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{rows}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    let result = match args.command {
        Command::Analyze => cmd_analyze(&args),
        Command::VerifyRobinson => cmd_verify(&args, true),
        Command::VerifyLipschitz => cmd_verify(&args, false),
        Command::Sweep => cmd_sweep(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
