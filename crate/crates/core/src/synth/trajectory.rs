use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::geom::{RotationQuat, Vec3};
use crate::imu::GyroSample;
use nalgebra::Quaternion;

/// Smooth body angular velocity `omega(t) = offset + amp * sin(freq t + phase)`
/// (per axis, rad/s, body frame).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GyroTrajectory {
    pub offset: Vec3,
    pub amp: Vec3,
    pub freq: Vec3,
    pub phase: Vec3,
}

impl GyroTrajectory {
    /// Random trajectory with rates up to about 1.5 rad/s.
    pub fn random(rng: &mut impl Rng) -> Self {
        let mut v = |lo: f64, hi: f64| Vec3::from_fn(|_, _| rng.random_range(lo..hi));
        Self {
            offset: v(-0.5, 0.5),
            amp: v(0.0, 1.0),
            freq: v(1.0, 20.0),
            phase: v(0.0, std::f64::consts::TAU),
        }
    }

    pub fn omega(&self, t: f64) -> Vec3 {
        Vec3::from_fn(|i, _| self.offset[i] + self.amp[i] * (self.freq[i] * t + self.phase[i]).sin())
    }
}

fn qdot(q: &Quaternion<f64>, omega: &Vec3) -> Quaternion<f64> {
    q * Quaternion::from_imag(*omega) * 0.5
}

/// Orientation of the body at `t1` relative to `t0`, from RK4 integration of
/// `q' = q (0, omega) / 2` with `steps` substeps.
pub fn reference_rotation(traj: &GyroTrajectory, t0: f64, t1: f64, steps: usize) -> RotationQuat {
    let h = (t1 - t0) / steps as f64;
    let mut q = Quaternion::identity();
    for k in 0..steps {
        let t = t0 + k as f64 * h;
        let k1 = qdot(&q, &traj.omega(t));
        let k2 = qdot(&(q + k1 * (h / 2.0)), &traj.omega(t + h / 2.0));
        let k3 = qdot(&(q + k2 * (h / 2.0)), &traj.omega(t + h / 2.0));
        let k4 = qdot(&(q + k3 * h), &traj.omega(t + h));
        q += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        q = q.normalize();
    }
    RotationQuat::new_normalize(q)
}

/// Gyro samples at `rate_hz` over `[0, duration]` with optional white noise
/// of standard deviation `sigma` (rad/s) and a constant bias.
pub fn simulate_gyro(
    traj: &GyroTrajectory,
    rate_hz: f64,
    duration: f64,
    sigma: f64,
    bias: Vec3,
    rng: &mut impl Rng,
) -> Vec<GyroSample> {
    let n = (rate_hz * duration).round() as usize;
    let noise = Normal::new(0.0, sigma.max(0.0)).expect("finite sigma");
    (0..=n)
        .map(|k| {
            let t = k as f64 / rate_hz;
            let eps = if sigma > 0.0 {
                Vec3::from_fn(|_, _| noise.sample(rng))
            } else {
                Vec3::zeros()
            };
            GyroSample::new(t, traj.omega(t) + bias + eps)
        })
        .collect()
}
