//! Gyroscope-only pre-integration.
//!
//! Angular rates are integrated with the midpoint rate of each sample
//! interval; the bias is the mean rate over a window in which the sensor was
//! stationary. Accelerometer data is not used.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{RotationMat, RotationQuat, Vec3};

pub const MIN_BIAS_SAMPLES: usize = 10;

/// One gyro reading: time in seconds, body-frame angular rate in rad/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GyroSample {
    pub t: f64,
    pub omega: Vec3,
}

impl GyroSample {
    pub fn new(t: f64, omega: Vec3) -> Self {
        Self { t, omega }
    }
}

/// Constant additive gyro bias, rad/s.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct GyroBias {
    pub b: Vec3,
}

impl GyroBias {
    pub fn zero() -> Self {
        Self::default()
    }

    /// Biases above 0.1 rad/s are unusual for MEMS gyros.
    pub fn is_plausible(&self) -> bool {
        self.b.norm() < 0.1
    }
}

/// Mean angular rate over a window the caller knows to be stationary.
pub fn estimate_bias(samples: &[GyroSample]) -> Result<GyroBias> {
    if samples.len() < MIN_BIAS_SAMPLES {
        return Err(Error::TooFewSamples {
            needed: MIN_BIAS_SAMPLES,
            got: samples.len(),
        });
    }
    let sum = samples.iter().fold(Vec3::zeros(), |acc, s| acc + s.omega);
    Ok(GyroBias {
        b: sum / samples.len() as f64,
    })
}

fn rate_at(samples: &[GyroSample], t: f64) -> Vec3 {
    let k = samples.partition_point(|s| s.t <= t);
    if k == 0 {
        return samples[0].omega;
    }
    if k == samples.len() {
        return samples[k - 1].omega;
    }
    let (a, b) = (&samples[k - 1], &samples[k]);
    let s = (t - a.t) / (b.t - a.t);
    a.omega * (1.0 - s) + b.omega * s
}

/// Orientation of the body at `t1` relative to the body at `t0`.
///
/// Starting from identity, each interval `[ta, tb]` between consecutive knots
/// applies `q <- q * exp((w_mid - bias) dt)` where `w_mid` is the mean of the
/// rates at both ends. Knots are the samples strictly inside `(t0, t1)` plus
/// the two boundaries, whose rates are linearly interpolated.
pub fn integrate_gyro(samples: &[GyroSample], bias: &GyroBias, t0: f64, t1: f64) -> Result<RotationQuat> {
    let (first, last) = match (samples.first(), samples.last()) {
        (Some(f), Some(l)) => (f, l),
        _ => return Err(Error::EmptyStream),
    };
    if !(t0 < t1) || t0 < first.t || t1 > last.t {
        return Err(Error::OutOfRange { t0, t1 });
    }

    let start = samples.partition_point(|s| s.t <= t0);
    let end = samples.partition_point(|s| s.t < t1);
    let mut q = RotationQuat::identity();
    let mut prev_t = t0;
    let mut prev_w = rate_at(samples, t0);
    let knots = samples[start..end]
        .iter()
        .map(|s| (s.t, s.omega))
        .chain(std::iter::once((t1, rate_at(samples, t1))));
    for (t, w) in knots {
        let dt = t - prev_t;
        let mid = (prev_w + w) * 0.5 - bias.b;
        q *= RotationQuat::from_scaled_axis(mid * dt);
        q.renormalize();
        prev_t = t;
        prev_w = w;
    }
    Ok(q)
}

/// Relative camera rotation between two frame timestamps, in the form the
/// solvers consume (`X_b = R X_a + t`).
///
/// `cam_from_imu` maps IMU-frame vectors into the camera frame. Since the
/// integrated quaternion maps body(`t_b`) coordinates into body(`t_a`), the
/// point transform from view `a` to view `b` is its inverse, conjugated by
/// the extrinsic.
pub fn relative_rotation_for_pair(
    samples: &[GyroSample],
    bias: &GyroBias,
    t_frame_a: f64,
    t_frame_b: f64,
    cam_from_imu: &RotationMat,
) -> Result<RotationMat> {
    let q = integrate_gyro(samples, bias, t_frame_a, t_frame_b)?;
    let body = q.inverse().to_rotation_matrix();
    Ok(cam_from_imu * body * cam_from_imu.inverse())
}
