//! `synth`: writes a synthetic two-view fixture (correspondences, gyro
//! stream, ground truth) for trying out `solve` and `ransac`.

use std::path::PathBuf;

use clap::Args;
use imurel::exec::item_rng;
use imurel::synth::{generate_instance_with, reference_rotation, resample_x2, simulate_gyro, GyroTrajectory, Placement, SceneConfig};
use imurel::Vec3;
use serde::{Deserialize, Serialize};

use crate::io::{atomic_write, to_json, write_correspondences, write_gyro, SCHEMA_VERSION};
use crate::Failure;

pub const GYRO_RATE_HZ: f64 = 500.0;
pub const FRAME_T0: f64 = 0.1;
pub const FRAME_T1: f64 = 0.3;

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, env = "IMUREL_OUT_DIR", default_value = "imurel-out")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 100)]
    pub points: usize,
    /// Fraction of matches (taken from the end of the file) whose second point
    /// is replaced by a uniform one.
    #[arg(long, default_value_t = 0.0)]
    pub outliers: f64,
    /// Division-model coefficient, normalized units (random in [-0.9, 0] if absent).
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: Option<f64>,
    /// Focal length in pixels (random in [300, 3000] if absent).
    #[arg(long)]
    pub focal: Option<f64>,
    #[arg(long, default_value_t = 1080.0)]
    pub width: f64,
    #[arg(long, default_value_t = 1080.0)]
    pub height: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Truth {
    pub schema_version: u32,
    pub focal_px: f64,
    /// Normalized units.
    pub lambda: f64,
    pub t: [f64; 3],
    /// Relative rotation `qw,qx,qy,qz` (view 1 to view 2).
    pub quat: [f64; 4],
    pub t0: f64,
    pub t1: f64,
    pub outlier: Vec<bool>,
}

pub fn cmd_synth(args: &SynthArgs) -> Result<(), Failure> {
    if !(0.0..=1.0).contains(&args.outliers) {
        return Err(Failure::input("--outliers must lie in [0, 1]"));
    }
    let mut scene = SceneConfig {
        image_size: [args.width, args.height],
        ..SceneConfig::default().with_points(args.points)
    };
    if let Some(l) = args.lambda {
        scene.lambda_range = [l, l];
    }
    if let Some(f) = args.focal {
        scene.f_range = [f, f];
    }
    scene.validate().map_err(|e| Failure::input(e.to_string()))?;

    let mut rng = item_rng(args.seed, 0);
    let traj = GyroTrajectory::random(&mut rng);
    let q = reference_rotation(&traj, FRAME_T0, FRAME_T1, 4000);
    let relative = q.inverse();
    let inst = generate_instance_with(&scene, Placement::FixedRelative(relative.to_rotation_matrix()), &mut rng)
        .map_err(|e| Failure::input(e.to_string()))?;
    let gyro = simulate_gyro(&traj, GYRO_RATE_HZ, FRAME_T1 + 0.1, 0.0, Vec3::zeros(), &mut rng);

    let n_out = (args.outliers * args.points as f64).round() as usize;
    let mut corrs = inst.corrs.clone();
    let idx: Vec<usize> = (args.points - n_out..args.points).collect();
    resample_x2(&mut corrs, &idx, inst.image_size, &mut rng);

    let truth = Truth {
        schema_version: SCHEMA_VERSION,
        focal_px: inst.gt.focal_px,
        lambda: inst.gt.lambda,
        t: [inst.gt.t.x, inst.gt.t.y, inst.gt.t.z],
        quat: [relative.w, relative.i, relative.j, relative.k],
        t0: FRAME_T0,
        t1: FRAME_T1,
        outlier: (0..args.points).map(|i| i >= args.points - n_out).collect(),
    };
    write_correspondences(&args.out.join("corrs.csv"), &corrs, args.width, args.height)?;
    write_gyro(&args.out.join("gyro.csv"), &gyro)?;
    atomic_write(&args.out.join("truth.json"), to_json(&truth).as_bytes())?;
    eprintln!("wrote corrs.csv, gyro.csv, truth.json to {}", args.out.display());
    Ok(())
}
