//! `solve` and `ransac` subcommands.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use imurel::geom::disambiguate_sign;
use imurel::imu::{relative_rotation_for_pair, GyroBias};
use imurel::robust::{histogram_vote_lambda, ransac_estimate, LambdaHistogram, RansacConfig, Scoring, DEFAULT_BIN_WIDTH};
use imurel::solvers::{solve, Diagnostics, MinimalProblem, SolverKind};
use imurel::{Correspondence, Error, Normalization, PoseSolution, RotationMat, RotationQuat};
use serde::{Deserialize, Serialize};

use crate::io::{atomic_write, parse_quat, read_correspondences, read_gyro, to_json, SCHEMA_VERSION};
use crate::Failure;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SolverArg {
    #[value(name = "2pt")]
    TwoPoint,
    #[value(name = "3pt")]
    ThreePoint,
    #[value(name = "4pt")]
    FourPoint,
}

impl From<SolverArg> for SolverKind {
    fn from(s: SolverArg) -> Self {
        match s {
            SolverArg::TwoPoint => SolverKind::TwoPoint,
            SolverArg::ThreePoint => SolverKind::ThreePoint,
            SolverArg::FourPoint => SolverKind::FourPoint,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScoringArg {
    InlierCount,
    Truncated,
}

/// Inputs shared by `solve` and `ransac`.
#[derive(Debug, Args)]
pub struct PoseInput {
    /// Correspondence CSV with header `u1,v1,u2,v2` (pixels).
    #[arg(long)]
    pub corrs: PathBuf,
    /// Image width in pixels; fixes the principal point and normalization.
    #[arg(long)]
    pub width: f64,
    #[arg(long)]
    pub height: f64,
    /// Relative rotation `qw,qx,qy,qz` taking view-1 camera coordinates to view 2.
    #[arg(long, value_parser = parse_quat, allow_hyphen_values = true, conflicts_with = "gyro")]
    pub quat: Option<RotationQuat>,
    /// Gyro CSV with header `t,wx,wy,wz` (seconds, rad/s).
    #[arg(long, requires_all = ["t0", "t1"])]
    pub gyro: Option<PathBuf>,
    /// Timestamp of the first frame, seconds.
    #[arg(long, allow_hyphen_values = true)]
    pub t0: Option<f64>,
    /// Timestamp of the second frame, seconds.
    #[arg(long, allow_hyphen_values = true)]
    pub t1: Option<f64>,
    /// Camera-from-IMU rotation `qw,qx,qy,qz` (identity by default).
    #[arg(long, value_parser = parse_quat, allow_hyphen_values = true, requires = "gyro")]
    pub cam_imu: Option<RotationQuat>,
    #[arg(long, value_enum, default_value = "3pt")]
    pub solver: SolverArg,
    /// Known focal length in pixels (2-point solver only).
    #[arg(long)]
    pub focal: Option<f64>,
    /// Known division-model coefficient, normalized units (2-point solver only).
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub lambda: f64,
    /// Also write the JSON report to this file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

struct Prepared {
    corrs: Vec<Correspondence>,
    rotation: RotationMat,
    norm: Normalization,
    kind: SolverKind,
    known: Option<(f64, f64)>,
}

impl PoseInput {
    fn prepare(&self) -> Result<Prepared, Failure> {
        if !(self.width > 0.0 && self.height > 0.0 && self.width.is_finite() && self.height.is_finite()) {
            return Err(Failure::input("--width and --height must be positive"));
        }
        let corrs = read_correspondences(&self.corrs, self.width, self.height)?;
        let rotation = match (&self.quat, &self.gyro) {
            (Some(q), None) => q.to_rotation_matrix(),
            (None, Some(g)) => {
                let samples = read_gyro(g)?;
                let (t0, t1) = (self.t0.expect("clap requires t0"), self.t1.expect("clap requires t1"));
                let cam_imu = self.cam_imu.unwrap_or_else(RotationQuat::identity).to_rotation_matrix();
                relative_rotation_for_pair(&samples, &GyroBias::zero(), t0, t1, &cam_imu)
                    .map_err(|e| Failure::input(format!("{}: {e}", g.display())))?
            }
            _ => return Err(Failure::input("give the rotation with either --quat or --gyro/--t0/--t1")),
        };
        let kind = SolverKind::from(self.solver);
        let known = match (kind, self.focal) {
            (SolverKind::TwoPoint, Some(f)) if f > 0.0 && f.is_finite() => Some((f, self.lambda)),
            (SolverKind::TwoPoint, _) => return Err(Failure::input("the 2pt solver needs --focal > 0")),
            _ => None,
        };
        Ok(Prepared {
            corrs,
            rotation,
            norm: Normalization::for_image(self.width, self.height),
            kind,
            known,
        })
    }
}

/// One candidate model in a JSON report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionReport {
    /// Inverse focal length, normalized units.
    pub w: f64,
    pub focal_px: f64,
    /// Division-model coefficient, normalized units.
    pub lambda: Option<f64>,
    /// The same coefficient for centred pixel coordinates.
    pub lambda_px: Option<f64>,
    pub t: [f64; 3],
    /// Rows of F acting on lifted normalized points `(x, y, 1 + lambda r^2)`.
    pub fundamental: [[f64; 3]; 3],
    pub max_residual: Option<f64>,
    pub null_residual: Option<f64>,
    /// Correspondences triangulated in front of both cameras.
    pub points_in_front: usize,
}

impl SolutionReport {
    fn new(sol: &PoseSolution, diag: Option<&Diagnostics>, front: usize, norm: &Normalization) -> Self {
        let f = sol.fundamental;
        Self {
            w: sol.w,
            focal_px: sol.focal_px(norm),
            lambda: sol.lambda,
            lambda_px: sol.lambda.map(|l| norm.lambda_to_pixels(l)),
            t: [sol.t.x, sol.t.y, sol.t.z],
            fundamental: [0, 1, 2].map(|i| [f[(i, 0)], f[(i, 1)], f[(i, 2)]]),
            max_residual: diag.map(|d| d.max_residual),
            null_residual: diag.map(|d| d.null_residual),
            points_in_front: front,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub schema_version: u32,
    pub solver: SolverKind,
    pub correspondences_used: usize,
    pub real_roots: usize,
    /// Index into `solutions` of the model with the most points in front.
    pub best: Option<usize>,
    pub solutions: Vec<SolutionReport>,
}

fn emit(json: &str, out: Option<&Path>) -> Result<(), Failure> {
    print!("{json}");
    if let Some(p) = out {
        atomic_write(p, json.as_bytes())?;
    }
    Ok(())
}

fn solver_failure(e: Error) -> Failure {
    match e {
        Error::DegenerateSample(_) | Error::ZeroResultant | Error::NoModelFound => Failure::no_solution(e.to_string()),
        other => Failure::input(other.to_string()),
    }
}

pub fn cmd_solve(args: &PoseInput) -> Result<(), Failure> {
    let p = args.prepare()?;
    let k = p.kind.sample_size();
    if p.corrs.len() < k {
        return Err(Failure::input(format!(
            "the {} solver needs {k} correspondences, got {}",
            p.kind,
            p.corrs.len()
        )));
    }
    if p.corrs.len() > k {
        eprintln!(
            "warning: {} correspondences given; the {} solver uses the first {k}",
            p.corrs.len(),
            p.kind
        );
    }
    let sample = p.corrs[..k].to_vec();
    let out = solve(p.kind, &MinimalProblem::new(sample.clone(), p.rotation, p.norm), p.known).map_err(solver_failure)?;
    let mut best: Option<(usize, usize)> = None;
    let solutions: Vec<SolutionReport> = out
        .solutions
        .iter()
        .zip(&out.diagnostics)
        .enumerate()
        .map(|(i, (sol, diag))| {
            let (sol, front) = disambiguate_sign(sol, &sample, &p.norm);
            if best.is_none_or(|(_, b)| front > b) {
                best = Some((i, front));
            }
            SolutionReport::new(&sol, Some(diag), front, &p.norm)
        })
        .collect();
    let report = SolveReport {
        schema_version: SCHEMA_VERSION,
        solver: p.kind,
        correspondences_used: k,
        real_roots: out.real_roots,
        best: best.map(|b| b.0),
        solutions,
    };
    emit(&to_json(&report), args.out.as_deref())?;
    if report.solutions.is_empty() {
        return Err(Failure::no_solution("solver returned no admissible solution"));
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct RansacArgs {
    #[command(flatten)]
    pub input: PoseInput,
    #[arg(long, default_value_t = 1000)]
    pub iterations: usize,
    /// Sampson inlier threshold, pixels.
    #[arg(long, default_value_t = 1.0)]
    pub threshold: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "inlier-count")]
    pub scoring: ScoringArg,
    /// Minimum fraction of inliers in front of both cameras.
    #[arg(long, default_value_t = 0.5)]
    pub min_cheirality: f64,
    /// Persistent histogram file; the estimated lambda is added to it.
    #[arg(long)]
    pub lambda_histogram: Option<PathBuf>,
    /// Bin width for a new histogram file, normalized units.
    #[arg(long, default_value_t = DEFAULT_BIN_WIDTH)]
    pub bin_width: f64,
}

/// On-disk accumulator for per-pair lambda estimates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HistogramFile {
    pub schema_version: u32,
    pub bin_width: f64,
    pub lambdas: Vec<f64>,
    pub histogram: LambdaHistogram,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramSummary {
    pub path: String,
    pub count: usize,
    pub mode_lambda: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RansacReport {
    pub schema_version: u32,
    pub solver: SolverKind,
    pub iterations: usize,
    pub threshold_px: f64,
    pub seed: u64,
    pub score: usize,
    pub trials_run: usize,
    pub mean_sampson: f64,
    pub best: SolutionReport,
    pub inlier_mask: Vec<bool>,
    pub lambda_histogram: Option<HistogramSummary>,
}

fn update_histogram(path: &Path, lambda: f64, bin_width: f64) -> Result<HistogramSummary, Failure> {
    let mut lambdas = if path.exists() {
        let text = std::fs::read_to_string(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
        let de = &mut serde_json::Deserializer::from_str(&text);
        let file: HistogramFile = serde_path_to_error::deserialize(de)
            .map_err(|e| Failure::input(format!("{}: at `{}`: {}", path.display(), e.path(), e.inner())))?;
        if file.bin_width != bin_width {
            return Err(Failure::input(format!(
                "{}: bin width {} differs from --bin-width {bin_width}",
                path.display(),
                file.bin_width
            )));
        }
        file.lambdas
    } else {
        Vec::new()
    };
    lambdas.push(lambda);
    let histogram = histogram_vote_lambda(&lambdas, bin_width).map_err(|e| Failure::input(e.to_string()))?;
    let summary = HistogramSummary {
        path: path.display().to_string(),
        count: histogram.total,
        mode_lambda: histogram.mode_lambda,
    };
    let file = HistogramFile {
        schema_version: SCHEMA_VERSION,
        bin_width,
        lambdas,
        histogram,
    };
    atomic_write(path, to_json(&file).as_bytes())?;
    Ok(summary)
}

pub fn cmd_ransac(args: &RansacArgs) -> Result<(), Failure> {
    let p = args.input.prepare()?;
    let cfg = RansacConfig {
        iterations: args.iterations,
        threshold_px: args.threshold,
        seed: args.seed,
        solver: p.kind,
        min_cheirality_fraction: args.min_cheirality,
        scoring: match args.scoring {
            ScoringArg::InlierCount => Scoring::InlierCount,
            ScoringArg::Truncated => Scoring::Truncated,
        },
        ..Default::default()
    };
    if args.lambda_histogram.is_some() && p.kind != SolverKind::FourPoint {
        return Err(Failure::input("--lambda-histogram needs the 4pt solver"));
    }
    if !(args.bin_width > 0.0 && args.bin_width.is_finite()) {
        return Err(Failure::input("--bin-width must be positive"));
    }
    let res = ransac_estimate(&p.corrs, &p.rotation, &p.norm, &cfg, p.known).map_err(solver_failure)?;
    let inliers: Vec<Correspondence> = p.corrs.iter().zip(&res.inlier_mask).filter(|(_, &m)| m).map(|(c, _)| *c).collect();
    let front = imurel::geom::cheirality_inliers(&res.best, &inliers, &p.norm);
    let lambda_histogram = match &args.lambda_histogram {
        Some(path) => Some(update_histogram(path, res.best.lambda_or_zero(), args.bin_width)?),
        None => None,
    };
    let report = RansacReport {
        schema_version: SCHEMA_VERSION,
        solver: p.kind,
        iterations: cfg.iterations,
        threshold_px: cfg.threshold_px,
        seed: cfg.seed,
        score: res.score,
        trials_run: res.trials_run,
        mean_sampson: res.mean_sampson,
        best: SolutionReport::new(&res.best, None, front, &p.norm),
        inlier_mask: res.inlier_mask,
        lambda_histogram,
    };
    emit(&to_json(&report), args.input.out.as_deref())
}
