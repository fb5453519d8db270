//! `bench` subcommands: synthetic experiments written as CSV + JSON with a
//! run manifest that can be replayed.

use std::path::Path;

use imurel::solvers::SolverKind;
use imurel::synth::{
    run_noise_sweep, run_stability, run_timing, NoiseSweepConfig, StabilityConfig, TimingConfig, TrialRecord,
};
use serde::{Deserialize, Serialize};

use crate::io::{atomic_write, to_json, SCHEMA_VERSION};
use crate::Failure;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BenchKind {
    Stability,
    Noise,
    Timing,
}

impl BenchKind {
    pub fn name(self) -> &'static str {
        match self {
            BenchKind::Stability => "stability",
            BenchKind::Noise => "noise",
            BenchKind::Timing => "timing",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BenchConfig {
    Stability(StabilityConfig),
    Noise(NoiseSweepConfig),
    Timing(TimingConfig),
}

impl BenchConfig {
    pub fn default_for(kind: BenchKind) -> Self {
        match kind {
            BenchKind::Stability => BenchConfig::Stability(StabilityConfig::default()),
            BenchKind::Noise => BenchConfig::Noise(NoiseSweepConfig::default()),
            BenchKind::Timing => BenchConfig::Timing(TimingConfig::default()),
        }
    }

    pub fn load(kind: BenchKind, path: &Path) -> Result<Self, Failure> {
        use crate::io::load_config;
        Ok(match kind {
            BenchKind::Stability => BenchConfig::Stability(load_config(path)?),
            BenchKind::Noise => BenchConfig::Noise(load_config(path)?),
            BenchKind::Timing => BenchConfig::Timing(load_config(path)?),
        })
    }

    fn from_value(kind: BenchKind, v: serde_json::Value) -> Result<Self, Failure> {
        let bad = |e: serde_path_to_error::Error<serde_json::Error>| {
            Failure::input(format!("manifest config: at `{}`: {}", e.path(), e.inner()))
        };
        Ok(match kind {
            BenchKind::Stability => BenchConfig::Stability(serde_path_to_error::deserialize(v).map_err(bad)?),
            BenchKind::Noise => BenchConfig::Noise(serde_path_to_error::deserialize(v).map_err(bad)?),
            BenchKind::Timing => BenchConfig::Timing(serde_path_to_error::deserialize(v).map_err(bad)?),
        })
    }

    pub fn kind(&self) -> BenchKind {
        match self {
            BenchConfig::Stability(_) => BenchKind::Stability,
            BenchConfig::Noise(_) => BenchKind::Noise,
            BenchConfig::Timing(_) => BenchKind::Timing,
        }
    }

    pub fn set_seed(&mut self, seed: u64) {
        match self {
            BenchConfig::Stability(c) => c.seed = seed,
            BenchConfig::Noise(c) => c.seed = seed,
            BenchConfig::Timing(c) => c.seed = seed,
        }
    }

    fn seed(&self) -> u64 {
        match self {
            BenchConfig::Stability(c) => c.seed,
            BenchConfig::Noise(c) => c.seed,
            BenchConfig::Timing(c) => c.seed,
        }
    }

    fn validate(&self) -> Result<(), Failure> {
        let r = match self {
            BenchConfig::Stability(c) => c.validate(),
            BenchConfig::Noise(c) => c.validate(),
            BenchConfig::Timing(c) => c.validate(),
        };
        r.map_err(|e| Failure::input(e.to_string()))
    }

    fn to_value(&self) -> serde_json::Value {
        let v = match self {
            BenchConfig::Stability(c) => serde_json::to_value(c),
            BenchConfig::Noise(c) => serde_json::to_value(c),
            BenchConfig::Timing(c) => serde_json::to_value(c),
        };
        v.expect("configs serialize")
    }
}

/// Provenance record written next to every benchmark's outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub schema_version: u32,
    pub command: String,
    pub kind: BenchKind,
    pub artifact_version: String,
    pub seed: u64,
    /// Fully resolved configuration, defaults included.
    pub config: serde_json::Value,
    /// Files reproduced byte-for-byte by a replay, relative to the output
    /// directory.
    pub outputs: Vec<String>,
    /// Files that depend on the machine (wall-clock latency).
    pub nondeterministic_outputs: Vec<String>,
    pub started_at: String,
    pub finished_at: String,
}

pub fn manifest_name(kind: BenchKind) -> String {
    format!("{}_manifest.json", kind.name())
}

struct Output {
    name: String,
    bytes: Vec<u8>,
    deterministic: bool,
}

fn csv_bytes<T: Serialize>(rows: impl IntoIterator<Item = T>) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("rows serialize to csv");
    }
    w.into_inner().expect("in-memory writer")
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    schema_version: u32,
    kind: BenchKind,
    #[serde(flatten)]
    body: &'a T,
}

fn json_output<T: Serialize>(name: String, kind: BenchKind, body: &T, deterministic: bool) -> Output {
    let env = Envelope {
        schema_version: SCHEMA_VERSION,
        kind,
        body,
    };
    Output {
        name,
        bytes: to_json(&env).into_bytes(),
        deterministic,
    }
}

/// One row of `noise.csv`.
#[derive(Serialize)]
struct NoiseRow {
    level: f64,
    trial: usize,
    solver: SolverKind,
    f_gt: f64,
    lambda_gt: f64,
    n_solutions: usize,
    real_roots: usize,
    e_r: Option<f64>,
    e_t: Option<f64>,
    e_f: Option<f64>,
    e_fund: Option<f64>,
    lambda_est: Option<f64>,
    f_est: Option<f64>,
}

impl NoiseRow {
    fn new(level: f64, r: &TrialRecord) -> Self {
        Self {
            level,
            trial: r.trial,
            solver: r.solver,
            f_gt: r.f_gt,
            lambda_gt: r.lambda_gt,
            n_solutions: r.n_solutions,
            real_roots: r.real_roots,
            e_r: r.e_r,
            e_t: r.e_t,
            e_f: r.e_f,
            e_fund: r.e_fund,
            lambda_est: r.lambda_est,
            f_est: r.f_est,
        }
    }
}

#[derive(Serialize)]
struct TimingRow {
    trial: usize,
    solver: SolverKind,
    n_solutions: usize,
    real_roots: usize,
}

fn run(cfg: &BenchConfig) -> Result<Vec<Output>, Failure> {
    let kind = cfg.kind();
    let name = kind.name();
    let fail = |e: imurel::Error| Failure::input(e.to_string());
    Ok(match cfg {
        BenchConfig::Stability(c) => {
            let r = run_stability(c).map_err(fail)?;
            for s in &r.summary {
                println!(
                    "{}: median e_F {:.2}, failures {:.3}%, max solutions {}",
                    s.solver,
                    s.e_fund_median,
                    100.0 * s.failure_fraction,
                    s.max_solutions
                );
            }
            #[derive(Serialize)]
            struct Body<'a> {
                summary: &'a [imurel::synth::StabilitySummary],
            }
            vec![
                Output {
                    name: format!("{name}.csv"),
                    bytes: csv_bytes(&r.records),
                    deterministic: true,
                },
                Output {
                    name: format!("{name}_histogram.csv"),
                    bytes: csv_bytes(&r.histogram),
                    deterministic: true,
                },
                json_output(format!("{name}_summary.json"), kind, &Body { summary: &r.summary }, true),
            ]
        }
        BenchConfig::Noise(c) => {
            let r = run_noise_sweep(c).map_err(fail)?;
            for s in &r.summary {
                println!("{} at {}°: median e_F {:.3}", s.solver, s.level, s.e_fund.median);
            }
            #[derive(Serialize)]
            struct Body<'a> {
                summary: &'a [imurel::synth::NoiseSummary],
            }
            vec![
                Output {
                    name: format!("{name}.csv"),
                    bytes: csv_bytes(r.records.iter().map(|n| NoiseRow::new(n.level, &n.record))),
                    deterministic: true,
                },
                json_output(format!("{name}_summary.json"), kind, &Body { summary: &r.summary }, true),
            ]
        }
        BenchConfig::Timing(c) => {
            let r = run_timing(c).map_err(fail)?;
            for l in &r.latency {
                println!("{}: mean {:.2} µs, median {:.2} µs", l.solver, l.mean_us, l.median_us);
            }
            #[derive(Serialize)]
            struct Counts<'a> {
                counts: &'a [imurel::synth::SolutionCounts],
            }
            #[derive(Serialize)]
            struct Lat<'a> {
                latency: &'a [imurel::synth::Latency],
            }
            vec![
                Output {
                    name: format!("{name}.csv"),
                    bytes: csv_bytes(r.per_trial.iter().map(|&(trial, solver, n_solutions, real_roots)| TimingRow {
                        trial,
                        solver,
                        n_solutions,
                        real_roots,
                    })),
                    deterministic: true,
                },
                json_output(format!("{name}_summary.json"), kind, &Counts { counts: &r.counts }, true),
                json_output(format!("{name}_latency.json"), kind, &Lat { latency: &r.latency }, false),
            ]
        }
    })
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

/// Runs a benchmark and writes its outputs and manifest into `out_dir`.
pub fn run_bench(cfg: &BenchConfig, out_dir: &Path) -> Result<RunManifest, Failure> {
    cfg.validate()?;
    let started_at = now();
    let outputs = run(cfg)?;
    for o in &outputs {
        atomic_write(&out_dir.join(&o.name), &o.bytes)?;
    }
    let kind = cfg.kind();
    let names = |det: bool| outputs.iter().filter(|o| o.deterministic == det).map(|o| o.name.clone()).collect();
    let manifest = RunManifest {
        schema_version: SCHEMA_VERSION,
        command: format!("bench {}", kind.name()),
        kind,
        artifact_version: env!("CARGO_PKG_VERSION").to_string(),
        seed: cfg.seed(),
        config: cfg.to_value(),
        outputs: names(true),
        nondeterministic_outputs: names(false),
        started_at,
        finished_at: now(),
    };
    atomic_write(&out_dir.join(manifest_name(kind)), to_json(&manifest).as_bytes())?;
    Ok(manifest)
}

pub fn read_manifest(path: &Path) -> Result<RunManifest, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(de)
        .map_err(|e| Failure::input(format!("{}: at `{}`: {}", path.display(), e.path(), e.inner())))
}

/// Re-runs the benchmark recorded in a manifest.
pub fn replay(manifest: &RunManifest, out_dir: &Path) -> Result<RunManifest, Failure> {
    if manifest.schema_version != SCHEMA_VERSION {
        return Err(Failure::input(format!(
            "manifest schema_version {} is not supported (expected {SCHEMA_VERSION})",
            manifest.schema_version
        )));
    }
    let cfg = BenchConfig::from_value(manifest.kind, manifest.config.clone())?;
    run_bench(&cfg, out_dir)
}
