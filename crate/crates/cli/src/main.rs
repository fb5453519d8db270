//! `imurel`: IMU-aided relative pose from the command line.
//!
//! Exit codes: 0 success, 1 malformed input or configuration, 2 no solution.

mod bench;
mod io;
mod pose;
mod synth;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use bench::{BenchConfig, BenchKind};

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn input(message: impl Into<String>) -> Self {
        Self {
            code: 1,
            message: message.into(),
        }
    }

    pub fn no_solution(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "imurel", version, about = "IMU-aided minimal relative-pose solvers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a minimal solver on one sample.
    Solve(pose::PoseInput),
    /// Robust estimation over all correspondences.
    Ransac(pose::RansacArgs),
    /// Write a synthetic fixture: correspondences, gyro stream and truth.
    Synth(synth::SynthArgs),
    /// Synthetic benchmarks.
    #[command(subcommand)]
    Bench(BenchCommand),
}

#[derive(Debug, clap::Args)]
struct BenchArgs {
    /// TOML or JSON config; defaults are used for missing fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, env = "IMUREL_OUT_DIR", default_value = "imurel-out")]
    out: PathBuf,
}

#[derive(Debug, Subcommand)]
enum BenchCommand {
    /// Noise-free numerical stability.
    Stability(BenchArgs),
    /// Accuracy against IMU rotation noise.
    Noise(BenchArgs),
    /// Solver latency and solution counts.
    Timing(BenchArgs),
    /// Re-run the benchmark recorded in a manifest.
    Replay {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, env = "IMUREL_OUT_DIR", default_value = "imurel-out")]
        out: PathBuf,
    },
}

fn run_bench(kind: BenchKind, args: &BenchArgs) -> Result<(), Failure> {
    let mut cfg = match &args.config {
        Some(p) => BenchConfig::load(kind, p)?,
        None => BenchConfig::default_for(kind),
    };
    if let Some(seed) = args.seed {
        cfg.set_seed(seed);
    }
    let m = bench::run_bench(&cfg, &args.out)?;
    eprintln!("wrote {} to {}", m.outputs.join(", "), args.out.display());
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Solve(a) => pose::cmd_solve(&a),
        Command::Ransac(a) => pose::cmd_ransac(&a),
        Command::Synth(a) => synth::cmd_synth(&a),
        Command::Bench(BenchCommand::Stability(a)) => run_bench(BenchKind::Stability, &a),
        Command::Bench(BenchCommand::Noise(a)) => run_bench(BenchKind::Noise, &a),
        Command::Bench(BenchCommand::Timing(a)) => run_bench(BenchKind::Timing, &a),
        Command::Bench(BenchCommand::Replay { manifest, out }) => {
            let m = bench::read_manifest(&manifest)?;
            bench::replay(&m, &out)?;
            eprintln!("replayed {} into {}", m.command, out.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
