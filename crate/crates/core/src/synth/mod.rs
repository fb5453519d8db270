//! Synthetic two-view scenes, noise models, error metrics and the benchmark
//! experiments built on them.

mod experiments;
mod metrics;
mod noise;
mod scene;
mod trajectory;

pub use experiments::*;
pub use metrics::{compute_metrics, fundamental_error, rotation_error_deg, translation_error_deg, Metrics, E_F_FLOOR};
pub use noise::{
    add_pixel_noise, apply_pixel_offsets, perturb_rotation, resample_x2, sample_pixel_offsets, NoiseConfig,
    PixelNoise, RotationJitter, NOISE_REFERENCE_PX,
};
pub use scene::{
    distort_point, distort_radius, generate_instance, generate_instance_with, CameraPose, GroundTruth, Instance,
    Placement, SceneConfig,
};
pub use trajectory::{reference_rotation, simulate_gyro, GyroTrajectory};
