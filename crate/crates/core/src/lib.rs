//! IMU-aided minimal relative-pose solvers.
//!
//! When the relative rotation between two views is known from integrated
//! gyroscope data, the epipolar constraint becomes linear in the translation.
//! This crate exploits that to solve for
//!
//! * the translation direction of a calibrated camera from 2 points,
//! * an unknown shared focal length from 3 points (a single quartic), and
//! * an unknown shared focal length plus one-parameter division-model radial
//!   distortion from 4 points,
//!
//! together with gyro pre-integration, RANSAC and a synthetic benchmark
//! harness.

pub mod error;
pub mod exec;
pub mod geom;
pub mod imu;
pub mod poly;
pub mod robust;
pub mod solvers;
pub mod synth;

pub use error::{Error, Result};
pub use geom::{
    Correspondence, Mat3, Normalization, PoseSolution, RotationMat, RotationQuat, Vec2, Vec3,
};
