use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::scene::random_unit;
use crate::geom::{Correspondence, RotationMat, Vec2, Vec3};

/// Reference image size in the relative pixel-noise model.
pub const NOISE_REFERENCE_PX: f64 = 1080.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PixelNoise {
    #[default]
    None,
    /// `sigma = 1080 / f` pixels per coordinate.
    Relative,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    pub pixel_sigma_mode: PixelNoise,
    /// Degrees.
    pub imu_angle_sigma: f64,
}

impl PixelNoise {
    pub fn sigma(self, focal_px: f64) -> f64 {
        match self {
            PixelNoise::None => 0.0,
            PixelNoise::Relative => NOISE_REFERENCE_PX / focal_px,
        }
    }
}

/// Rotation perturbation drawn once and applied at any sigma: a uniform
/// axis and a standard-normal `z`; the angle is `|z| sigma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationJitter {
    pub axis: Vec3,
    pub z: f64,
}

impl RotationJitter {
    pub fn sample(rng: &mut impl Rng) -> Self {
        Self {
            axis: random_unit(rng),
            z: StandardNormal.sample(rng),
        }
    }

    pub fn apply(&self, r: &RotationMat, sigma_deg: f64) -> RotationMat {
        if sigma_deg == 0.0 {
            return *r;
        }
        let angle = self.z.abs() * sigma_deg.to_radians();
        let axis = nalgebra::Unit::new_normalize(self.axis);
        RotationMat::from_axis_angle(&axis, angle) * r
    }
}

/// Composes `r` with a rotation about a uniform axis by `|N(0, sigma)|` degrees.
pub fn perturb_rotation(r: &RotationMat, sigma_deg: f64, rng: &mut impl Rng) -> RotationMat {
    RotationJitter::sample(rng).apply(r, sigma_deg)
}

/// Standard-normal offsets for every coordinate of every correspondence;
/// scaled by the per-instance sigma when applied.
pub fn sample_pixel_offsets(n: usize, rng: &mut impl Rng) -> Vec<[f64; 4]> {
    (0..n)
        .map(|_| std::array::from_fn(|_| StandardNormal.sample(rng)))
        .collect()
}

pub fn apply_pixel_offsets(corrs: &[Correspondence], offsets: &[[f64; 4]], sigma: f64) -> Vec<Correspondence> {
    if sigma == 0.0 {
        return corrs.to_vec();
    }
    corrs
        .iter()
        .zip(offsets)
        .map(|(c, o)| Correspondence {
            x1: c.x1 + Vec2::new(o[0], o[1]) * sigma,
            x2: c.x2 + Vec2::new(o[2], o[3]) * sigma,
        })
        .collect()
}

/// Adds independent `N(0, sigma^2)` noise to every pixel coordinate.
pub fn add_pixel_noise(
    corrs: &[Correspondence],
    focal_px: f64,
    mode: PixelNoise,
    rng: &mut impl Rng,
) -> Vec<Correspondence> {
    let sigma = mode.sigma(focal_px);
    if sigma == 0.0 {
        return corrs.to_vec();
    }
    let offsets = sample_pixel_offsets(corrs.len(), rng);
    apply_pixel_offsets(corrs, &offsets, sigma)
}

/// Replaces `x2` of the selected correspondences with a uniform point in the
/// centred image rectangle.
pub fn resample_x2(corrs: &mut [Correspondence], indices: &[usize], image_size: [f64; 2], rng: &mut impl Rng) {
    let (hw, hh) = (image_size[0] / 2.0, image_size[1] / 2.0);
    for &i in indices {
        corrs[i].x2 = Vec2::new(rng.random_range(-hw..hw), rng.random_range(-hh..hh));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::item_rng;

    #[test]
    fn zero_sigma_is_exact() {
        let r = RotationMat::from_euler_angles(0.1, -0.2, 0.3);
        assert_eq!(perturb_rotation(&r, 0.0, &mut item_rng(1, 0)), r);
        let c = vec![Correspondence::new(1.0, 2.0, 3.0, 4.0)];
        assert_eq!(add_pixel_noise(&c, 500.0, PixelNoise::None, &mut item_rng(1, 0)), c);
    }

    #[test]
    fn perturbation_stays_orthonormal() {
        let mut rng = item_rng(2, 0);
        let r = RotationMat::from_euler_angles(0.4, 0.5, -1.0);
        for _ in 0..100 {
            let p = perturb_rotation(&r, 5.0, &mut rng);
            let m = p.matrix();
            assert!((m.transpose() * m - crate::geom::Mat3::identity()).norm() < 1e-12);
            assert!((m.determinant() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn half_normal_mean_angle() {
        let mut rng = item_rng(3, 0);
        let sigma = 0.5;
        let n = 10_000;
        let r = RotationMat::identity();
        let mean: f64 = (0..n)
            .map(|_| perturb_rotation(&r, sigma, &mut rng).angle().to_degrees())
            .sum::<f64>()
            / n as f64;
        let expected = sigma * (2.0 / std::f64::consts::PI).sqrt();
        assert!((mean / expected - 1.0).abs() < 0.05, "mean {mean} vs {expected}");
    }

    fn coord_std(f: f64) -> f64 {
        let mut rng = item_rng(4, f as u64);
        let c = vec![Correspondence::new(0.0, 0.0, 0.0, 0.0); 25_000];
        let noisy = add_pixel_noise(&c, f, PixelNoise::Relative, &mut rng);
        let vals: Vec<f64> = noisy.iter().flat_map(|c| [c.x1.x, c.x1.y, c.x2.x, c.x2.y]).collect();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (vals.len() - 1) as f64).sqrt()
    }

    #[test]
    fn relative_pixel_sigma() {
        assert!((coord_std(1080.0) - 1.0).abs() < 0.03);
        assert!((coord_std(2160.0) - 0.5).abs() < 0.015);
    }
}
