use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::metrics::{compute_metrics, Metrics};
use super::noise::{apply_pixel_offsets, sample_pixel_offsets, PixelNoise, RotationJitter};
use super::scene::{generate_instance, Instance, SceneConfig};
use crate::error::{Error, Result};
use crate::exec::{item_rng, map_indexed, Execution};
use crate::geom::{Correspondence, RotationMat};
use crate::solvers::{solve, MinimalProblem, SolverKind, SolverOutput};

/// Lower edge of the stability histogram, `log10` units.
pub const HIST_MIN: f64 = -20.0;
pub const HIST_MAX: f64 = 1.0;
pub const HIST_BIN: f64 = 0.5;
/// Trials whose best `e_F` exceeds this count as failures.
pub const FAILURE_LOG10: f64 = -4.0;

pub const DEFAULT_NOISE_LEVELS: [f64; 6] = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5];
pub const MIN_TIMING_TRIALS: usize = 100;

fn default_solvers() -> Vec<SolverKind> {
    vec![SolverKind::ThreePoint, SolverKind::FourPoint]
}

fn solver_slot(kind: SolverKind) -> u64 {
    match kind {
        SolverKind::TwoPoint => 0,
        SolverKind::ThreePoint => 1,
        SolverKind::FourPoint => 2,
    }
}

/// Scene for `kind` in the noise-free experiments: solvers that do not
/// estimate distortion see undistorted images.
fn scene_for(kind: SolverKind, scene: &SceneConfig) -> SceneConfig {
    let mut cfg = scene.clone();
    if kind != SolverKind::FourPoint {
        cfg.lambda_range = [0.0, 0.0];
    }
    cfg.n_points = cfg.n_points.max(kind.sample_size());
    cfg
}

fn known_for(kind: SolverKind, inst: &Instance) -> Option<(f64, f64)> {
    (kind == SolverKind::TwoPoint).then_some((inst.gt.focal_px, inst.gt.lambda))
}

fn run_solver(kind: SolverKind, inst: &Instance, corrs: &[Correspondence], rotation: &RotationMat) -> Result<SolverOutput> {
    let k = kind.sample_size();
    let problem = MinimalProblem::new(corrs[..k].to_vec(), *rotation, inst.norm);
    solve(kind, &problem, known_for(kind, inst))
}

/// One solver run on one instance, scored by its best solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub solver: SolverKind,
    pub f_gt: f64,
    pub lambda_gt: f64,
    pub n_solutions: usize,
    pub real_roots: usize,
    pub e_r: Option<f64>,
    pub e_t: Option<f64>,
    pub e_f: Option<f64>,
    pub e_fund: Option<f64>,
    pub lambda_est: Option<f64>,
    pub f_est: Option<f64>,
}

impl TrialRecord {
    /// `e_F` with failed runs mapped to `+inf`.
    pub fn e_fund_or_inf(&self) -> f64 {
        self.e_fund.unwrap_or(f64::INFINITY)
    }
}

fn record(trial: usize, kind: SolverKind, inst: &Instance, out: Result<SolverOutput>) -> TrialRecord {
    let mut rec = TrialRecord {
        trial,
        solver: kind,
        f_gt: inst.gt.focal_px,
        lambda_gt: inst.gt.lambda,
        n_solutions: 0,
        real_roots: 0,
        e_r: None,
        e_t: None,
        e_f: None,
        e_fund: None,
        lambda_est: None,
        f_est: None,
    };
    let Ok(out) = out else { return rec };
    rec.n_solutions = out.len();
    rec.real_roots = out.real_roots;
    let best = out
        .solutions
        .iter()
        .map(|s| (s, compute_metrics(&inst.gt, s, &inst.norm)))
        .min_by(|a, b| a.1.e_fund.total_cmp(&b.1.e_fund));
    if let Some((sol, Metrics { e_r, e_t, e_f, e_fund })) = best {
        rec.e_r = Some(e_r);
        rec.e_t = Some(e_t);
        rec.e_f = Some(e_f);
        rec.e_fund = Some(e_fund);
        rec.lambda_est = sol.lambda;
        rec.f_est = Some(sol.focal_px(&inst.norm));
    }
    rec
}

/// Linear-interpolated quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    if lo == hi || sorted[hi] == sorted[lo] {
        sorted[lo]
    } else {
        sorted[lo] + (sorted[hi] - sorted[lo]) * frac
    }
}

fn sorted(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Quartiles of one quantity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quartiles {
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
}

impl Quartiles {
    pub fn of_sorted(v: &[f64]) -> Self {
        Self {
            q25: quantile_sorted(v, 0.25),
            median: quantile_sorted(v, 0.5),
            q75: quantile_sorted(v, 0.75),
        }
    }
}

// ---------------------------------------------------------------- stability

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StabilityConfig {
    pub seed: u64,
    pub n_trials: usize,
    pub solvers: Vec<SolverKind>,
    pub scene: SceneConfig,
    pub execution: Execution,
}

impl Default for StabilityConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            n_trials: 10_000,
            solvers: default_solvers(),
            scene: SceneConfig::default().with_points(4),
            execution: Execution::Parallel,
        }
    }
}

impl StabilityConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_trials == 0 {
            return Err(Error::InvalidConfig("n_trials: must be at least 1".into()));
        }
        if self.solvers.is_empty() {
            return Err(Error::InvalidConfig("solvers: list is empty".into()));
        }
        self.scene.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramRow {
    pub solver: SolverKind,
    pub bin_lo: f64,
    pub bin_hi: f64,
    pub count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilitySummary {
    pub solver: SolverKind,
    pub n_trials: usize,
    /// Runs that returned no solution.
    pub no_solution: usize,
    pub e_fund_q25: f64,
    pub e_fund_median: f64,
    pub e_fund_q75: f64,
    /// Fraction of trials with best `e_F` above [`FAILURE_LOG10`] (including
    /// runs without a solution).
    pub failure_fraction: f64,
    pub mean_solutions: f64,
    pub max_solutions: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub records: Vec<TrialRecord>,
    pub histogram: Vec<HistogramRow>,
    pub summary: Vec<StabilitySummary>,
}

fn histogram_rows(kind: SolverKind, values: &[f64]) -> Vec<HistogramRow> {
    let n_bins = ((HIST_MAX - HIST_MIN) / HIST_BIN).round() as usize;
    let mut counts = vec![0usize; n_bins];
    for &v in values.iter().filter(|v| v.is_finite()) {
        let idx = ((v - HIST_MIN) / HIST_BIN).floor().clamp(0.0, (n_bins - 1) as f64) as usize;
        counts[idx] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(i, count)| HistogramRow {
            solver: kind,
            bin_lo: HIST_MIN + i as f64 * HIST_BIN,
            bin_hi: HIST_MIN + (i + 1) as f64 * HIST_BIN,
            count,
        })
        .collect()
}

/// Noise-free stability: each trial draws a fresh instance per solver and
/// records the best `e_F` among the returned solutions.
pub fn run_stability(cfg: &StabilityConfig) -> Result<StabilityReport> {
    cfg.validate()?;
    let n_solvers = cfg.solvers.len();
    let records: Vec<Result<TrialRecord>> = map_indexed(cfg.n_trials * n_solvers, cfg.execution, |job| {
        let (trial, s) = (job / n_solvers, job % n_solvers);
        let kind = cfg.solvers[s];
        let mut rng = item_rng(cfg.seed, trial as u64 * 3 + solver_slot(kind));
        let inst = generate_instance(&scene_for(kind, &cfg.scene), &mut rng)?;
        let out = run_solver(kind, &inst, &inst.corrs, &inst.gt.rotation);
        Ok(record(trial, kind, &inst, out))
    });
    let records = records.into_iter().collect::<Result<Vec<_>>>()?;

    let mut histogram = Vec::new();
    let mut summary = Vec::new();
    for &kind in &cfg.solvers {
        let recs: Vec<&TrialRecord> = records.iter().filter(|r| r.solver == kind).collect();
        let e = sorted(recs.iter().map(|r| r.e_fund_or_inf()));
        histogram.extend(histogram_rows(kind, &e));
        let q = Quartiles::of_sorted(&e);
        summary.push(StabilitySummary {
            solver: kind,
            n_trials: recs.len(),
            no_solution: recs.iter().filter(|r| r.e_fund.is_none()).count(),
            e_fund_q25: q.q25,
            e_fund_median: q.median,
            e_fund_q75: q.q75,
            failure_fraction: e.iter().filter(|&&v| v > FAILURE_LOG10).count() as f64 / e.len() as f64,
            mean_solutions: recs.iter().map(|r| r.n_solutions as f64).sum::<f64>() / recs.len() as f64,
            max_solutions: recs.iter().map(|r| r.n_solutions).max().unwrap_or(0),
        });
    }
    Ok(StabilityReport {
        records,
        histogram,
        summary,
    })
}

// -------------------------------------------------------------- noise sweep

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSweepConfig {
    pub seed: u64,
    /// IMU angle sigmas in degrees.
    pub levels: Vec<f64>,
    pub n_per_level: usize,
    pub solvers: Vec<SolverKind>,
    pub scene: SceneConfig,
    pub pixel_noise: PixelNoise,
    pub execution: Execution,
}

impl Default for NoiseSweepConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            levels: DEFAULT_NOISE_LEVELS.to_vec(),
            n_per_level: 1000,
            solvers: default_solvers(),
            scene: SceneConfig::default().with_points(4).with_lambda(0.0),
            pixel_noise: PixelNoise::Relative,
            execution: Execution::Parallel,
        }
    }
}

impl NoiseSweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.levels.is_empty() {
            return Err(Error::InvalidConfig("levels: list is empty".into()));
        }
        if self.levels.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
            return Err(Error::InvalidConfig("levels: sigmas must be finite and nonnegative".into()));
        }
        if self.n_per_level == 0 {
            return Err(Error::InvalidConfig("n_per_level: must be at least 1".into()));
        }
        if self.solvers.is_empty() {
            return Err(Error::InvalidConfig("solvers: list is empty".into()));
        }
        self.scene.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseRecord {
    pub level: f64,
    #[serde(flatten)]
    pub record: TrialRecord,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSummary {
    pub level: f64,
    pub solver: SolverKind,
    pub n_trials: usize,
    pub no_solution: usize,
    pub e_r: Quartiles,
    pub e_t: Quartiles,
    pub e_f: Quartiles,
    pub e_fund: Quartiles,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSweepReport {
    pub records: Vec<NoiseRecord>,
    pub summary: Vec<NoiseSummary>,
}

/// Per-trial randomness shared by all levels and solvers.
struct NoiseDraw {
    inst: Instance,
    jitter: RotationJitter,
    offsets: Vec<[f64; 4]>,
}

fn draw_noise_trial(cfg: &NoiseSweepConfig, trial: usize) -> Result<NoiseDraw> {
    let mut rng = item_rng(cfg.seed, trial as u64);
    let max_k = cfg.solvers.iter().map(|k| k.sample_size()).max().unwrap_or(4);
    let mut scene = cfg.scene.clone();
    scene.n_points = scene.n_points.max(max_k);
    let inst = generate_instance(&scene, &mut rng)?;
    let jitter = RotationJitter::sample(&mut rng);
    let offsets = sample_pixel_offsets(inst.corrs.len(), &mut rng);
    Ok(NoiseDraw { inst, jitter, offsets })
}

/// Accuracy against IMU rotation noise with pixel noise active.
///
/// Trial `i` uses the same scene, rotation-perturbation direction and pixel
/// offsets at every level, so the levels differ only in the noise magnitude.
pub fn run_noise_sweep(cfg: &NoiseSweepConfig) -> Result<NoiseSweepReport> {
    cfg.validate()?;
    let draws = map_indexed(cfg.n_per_level, cfg.execution, |t| draw_noise_trial(cfg, t));
    let draws = draws.into_iter().collect::<Result<Vec<_>>>()?;

    let n_solvers = cfg.solvers.len();
    let per_level = cfg.n_per_level * n_solvers;
    let records = map_indexed(cfg.levels.len() * per_level, cfg.execution, |job| {
        let level = cfg.levels[job / per_level];
        let rest = job % per_level;
        let (trial, kind) = (rest / n_solvers, cfg.solvers[rest % n_solvers]);
        let d = &draws[trial];
        let rotation = d.jitter.apply(&d.inst.gt.rotation, level);
        let corrs = apply_pixel_offsets(&d.inst.corrs, &d.offsets, cfg.pixel_noise.sigma(d.inst.gt.focal_px));
        let out = run_solver(kind, &d.inst, &corrs, &rotation);
        NoiseRecord {
            level,
            record: record(trial, kind, &d.inst, out),
        }
    });

    let mut summary = Vec::new();
    for &level in &cfg.levels {
        for &kind in &cfg.solvers {
            let recs: Vec<&TrialRecord> = records
                .iter()
                .filter(|r| r.level == level && r.record.solver == kind)
                .map(|r| &r.record)
                .collect();
            let q = |f: fn(&TrialRecord) -> Option<f64>| {
                Quartiles::of_sorted(&sorted(recs.iter().map(|r| f(r).unwrap_or(f64::INFINITY))))
            };
            summary.push(NoiseSummary {
                level,
                solver: kind,
                n_trials: recs.len(),
                no_solution: recs.iter().filter(|r| r.e_fund.is_none()).count(),
                e_r: q(|r| r.e_r),
                e_t: q(|r| r.e_t),
                e_f: q(|r| r.e_f),
                e_fund: q(|r| r.e_fund),
            });
        }
    }
    Ok(NoiseSweepReport { records, summary })
}

// ------------------------------------------------------------------- timing

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimingConfig {
    pub seed: u64,
    pub n_trials: usize,
    pub solvers: Vec<SolverKind>,
    pub scene: SceneConfig,
}

impl Default for TimingConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            n_trials: 10_000,
            solvers: default_solvers(),
            scene: SceneConfig::default().with_points(4),
        }
    }
}

impl TimingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_trials < MIN_TIMING_TRIALS {
            return Err(Error::InvalidConfig(format!(
                "n_trials: timing needs at least {MIN_TIMING_TRIALS} trials, got {}",
                self.n_trials
            )));
        }
        if self.solvers.is_empty() {
            return Err(Error::InvalidConfig("solvers: list is empty".into()));
        }
        self.scene.validate()
    }
}

/// Solution counts; identical across runs with the same seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolutionCounts {
    pub solver: SolverKind,
    pub n_trials: usize,
    pub mean_solutions: f64,
    pub max_solutions: usize,
    pub mean_real_roots: f64,
    pub max_real_roots: usize,
}

/// Wall-clock latency in microseconds; machine dependent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Latency {
    pub solver: SolverKind,
    pub mean_us: f64,
    pub median_us: f64,
    pub p99_us: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingReport {
    pub counts: Vec<SolutionCounts>,
    pub latency: Vec<Latency>,
    /// Per trial and solver: `(solutions, real roots)`.
    pub per_trial: Vec<(usize, SolverKind, usize, usize)>,
}

/// Sequential wall-clock timing of each solver on pre-generated instances,
/// after one untimed warm-up pass over the same instances.
pub fn run_timing(cfg: &TimingConfig) -> Result<TimingReport> {
    cfg.validate()?;
    let mut counts = Vec::new();
    let mut latency = Vec::new();
    let mut per_trial = Vec::new();
    for &kind in &cfg.solvers {
        let scene = scene_for(kind, &cfg.scene);
        let instances = (0..cfg.n_trials)
            .map(|t| generate_instance(&scene, &mut item_rng(cfg.seed, t as u64 * 3 + solver_slot(kind))))
            .collect::<Result<Vec<_>>>()?;
        let problems: Vec<MinimalProblem> = instances
            .iter()
            .map(|i| MinimalProblem::new(i.corrs[..kind.sample_size()].to_vec(), i.gt.rotation, i.norm))
            .collect();
        for (p, i) in problems.iter().zip(&instances) {
            std::hint::black_box(solve(kind, p, known_for(kind, i)).ok());
        }
        let mut times = Vec::with_capacity(cfg.n_trials);
        let mut sols = Vec::with_capacity(cfg.n_trials);
        for (p, i) in problems.iter().zip(&instances) {
            let known = known_for(kind, i);
            let start = Instant::now();
            let out = std::hint::black_box(solve(kind, std::hint::black_box(p), known));
            times.push(start.elapsed().as_secs_f64() * 1e6);
            sols.push(out.map(|o| (o.len(), o.real_roots)).unwrap_or((0, 0)));
        }
        let n = cfg.n_trials as f64;
        counts.push(SolutionCounts {
            solver: kind,
            n_trials: cfg.n_trials,
            mean_solutions: sols.iter().map(|s| s.0 as f64).sum::<f64>() / n,
            max_solutions: sols.iter().map(|s| s.0).max().unwrap_or(0),
            mean_real_roots: sols.iter().map(|s| s.1 as f64).sum::<f64>() / n,
            max_real_roots: sols.iter().map(|s| s.1).max().unwrap_or(0),
        });
        let t = sorted(times.iter().copied());
        latency.push(Latency {
            solver: kind,
            mean_us: times.iter().sum::<f64>() / n,
            median_us: quantile_sorted(&t, 0.5),
            p99_us: quantile_sorted(&t, 0.99),
        });
        per_trial.extend(sols.iter().enumerate().map(|(i, s)| (i, kind, s.0, s.1)));
    }
    Ok(TimingReport {
        counts,
        latency,
        per_trial,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantiles() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile_sorted(&v, 0.5), 2.5);
        assert_eq!(quantile_sorted(&v, 0.0), 1.0);
        assert_eq!(quantile_sorted(&v, 1.0), 4.0);
        assert_eq!(quantile_sorted(&[f64::INFINITY, f64::INFINITY], 0.5), f64::INFINITY);
    }

    #[test]
    fn single_trial_stability() {
        let cfg = StabilityConfig {
            n_trials: 1,
            solvers: vec![SolverKind::ThreePoint],
            ..Default::default()
        };
        let r = run_stability(&cfg).unwrap();
        assert_eq!(r.records.len(), 1);
        assert_eq!(r.summary.len(), 1);
    }

    #[test]
    fn single_level_single_trial() {
        let cfg = NoiseSweepConfig {
            levels: vec![0.1],
            n_per_level: 1,
            solvers: vec![SolverKind::ThreePoint],
            ..Default::default()
        };
        let r = run_noise_sweep(&cfg).unwrap();
        assert_eq!(r.summary.len(), 1);
    }

    #[test]
    fn timing_needs_enough_trials() {
        let cfg = TimingConfig {
            n_trials: 50,
            ..Default::default()
        };
        assert!(matches!(run_timing(&cfg), Err(Error::InvalidConfig(_))));
    }
}
