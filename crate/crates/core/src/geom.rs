//! Rotations, the partially calibrated camera, the one-parameter division
//! model and the epipolar algebra shared by every solver.
//!
//! All solver math runs in *normalized* image coordinates: pixel positions
//! (principal point already subtracted) divided by [`Normalization::scale`],
//! which is `max(width, height)`. The distortion coefficient `lambda` lives in
//! the same frame. With inverse focal length `w = 1 / f` (normalized units),
//! an observed point `(x, y)` back-projects to the viewing ray
//!
//! ```text
//! ray(x, y) = (w x, w y, 1 + lambda (x^2 + y^2))
//! ```
//!
//! i.e. `K^-1 = diag(w, w, 1)` up to scale, applied to the division-model
//! lifted point. The fundamental matrix is `K^-1 [t]x R K^-1`.

use nalgebra::{Matrix3, Rotation3, UnitQuaternion, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec2 = Vector2<f64>;
pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// Orthonormal 3x3 rotation; `det = +1`.
pub type RotationMat = Rotation3<f64>;
/// Unit quaternion rotation; `q` and `-q` map to the same [`RotationMat`].
pub type RotationQuat = UnitQuaternion<f64>;

const TINY: f64 = 1e-14;

/// Pixel-to-normalized coordinate scaling (`max(width, height)`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub scale: f64,
}

impl Normalization {
    pub fn new(scale: f64) -> Self {
        assert!(scale > 0.0 && scale.is_finite(), "normalization scale must be positive");
        Self { scale }
    }

    pub fn for_image(width: f64, height: f64) -> Self {
        Self::new(width.max(height))
    }

    #[inline]
    pub fn to_normalized(&self, px: Vec2) -> Vec2 {
        px / self.scale
    }

    #[inline]
    pub fn to_pixels(&self, x: Vec2) -> Vec2 {
        x * self.scale
    }

    /// Inverse focal length in normalized units for a focal length in pixels.
    pub fn inverse_focal(&self, focal_px: f64) -> f64 {
        self.scale / focal_px
    }

    /// Focal length in pixels for a normalized inverse focal length.
    pub fn focal_px(&self, w: f64) -> f64 {
        self.scale / w
    }

    /// Distortion coefficient in pixel units: `lambda_px = lambda_norm / scale^2`.
    pub fn lambda_to_pixels(&self, lambda_norm: f64) -> f64 {
        lambda_norm / (self.scale * self.scale)
    }

    pub fn lambda_from_pixels(&self, lambda_px: f64) -> f64 {
        lambda_px * self.scale * self.scale
    }

    pub fn correspondence(&self, c: &Correspondence) -> Correspondence {
        Correspondence {
            x1: self.to_normalized(c.x1),
            x2: self.to_normalized(c.x2),
        }
    }
}

/// Focal length of a square-pixel camera with centred principal point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    /// Focal length in pixels.
    pub f: f64,
    /// Inverse focal length in pixels^-1.
    pub w: f64,
}

impl CameraIntrinsics {
    pub fn from_focal(f: f64) -> Self {
        assert!(f > 0.0, "focal length must be positive");
        Self { f, w: 1.0 / f }
    }
}

/// One-parameter division model `(x, y) -> (x, y, 1 + lambda r^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DistortionDivision {
    pub lambda: f64,
}

/// A matched point pair, pixel coordinates relative to the principal point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correspondence {
    pub x1: Vec2,
    pub x2: Vec2,
}

impl Correspondence {
    pub fn new(u1: f64, v1: f64, u2: f64, v2: f64) -> Self {
        Self {
            x1: Vec2::new(u1, v1),
            x2: Vec2::new(u2, v2),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.x1.iter().chain(self.x2.iter()).all(|v| v.is_finite())
    }
}

/// A candidate two-view model produced by one of the minimal solvers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoseSolution {
    /// Inverse focal length, normalized units.
    pub w: f64,
    /// Division-model coefficient, normalized units; `None` when not estimated.
    pub lambda: Option<f64>,
    /// Unit translation direction (`X2 = R X1 + t`).
    pub t: Vec3,
    /// Relative rotation the model was built with.
    pub rotation: RotationMat,
    /// Fundamental matrix acting on division-model lifted normalized points.
    pub fundamental: Mat3,
}

impl PoseSolution {
    pub fn lambda_or_zero(&self) -> f64 {
        self.lambda.unwrap_or(0.0)
    }

    pub fn focal_px(&self, norm: &Normalization) -> f64 {
        norm.focal_px(self.w)
    }

    /// Same model with the translation direction reversed.
    pub fn flipped(&self) -> Self {
        Self {
            t: -self.t,
            fundamental: -self.fundamental,
            ..self.clone()
        }
    }
}

/// Cross-product matrix: `skew(t) * v = t x v`.
pub fn skew(t: &Vec3) -> Mat3 {
    Mat3::new(0.0, -t.z, t.y, t.z, 0.0, -t.x, -t.y, t.x, 0.0)
}

/// Lifts a normalized point with the division model.
#[inline]
pub fn apply_division(x: &Vec2, lambda: f64) -> Vec3 {
    Vec3::new(x.x, x.y, 1.0 + lambda * x.norm_squared())
}

/// Viewing ray `diag(w, w, 1) * apply_division(x, lambda)`.
#[inline]
pub fn back_project(x: &Vec2, w: f64, lambda: f64) -> Vec3 {
    Vec3::new(w * x.x, w * x.y, 1.0 + lambda * x.norm_squared())
}

/// Builds `F = diag(w, w, 1) [t]x R diag(w, w, 1)` with `t` normalized.
pub fn fundamental_from_params(
    w: f64,
    lambda: Option<f64>,
    rotation: &RotationMat,
    t: &Vec3,
) -> Result<PoseSolution> {
    let n = t.norm();
    if !(n >= TINY) {
        return Err(Error::ZeroTranslation);
    }
    if !(w.abs() >= TINY) {
        return Err(Error::ZeroFocal);
    }
    let t = t / n;
    let k_inv = Mat3::from_diagonal(&Vec3::new(w, w, 1.0));
    let fundamental = k_inv * skew(&t) * rotation.matrix() * k_inv;
    Ok(PoseSolution {
        w,
        lambda,
        t,
        rotation: *rotation,
        fundamental,
    })
}

/// Algebraic residual `f(x2)^T F f(x1)` in normalized coordinates.
pub fn epipolar_residual(sol: &PoseSolution, c: &Correspondence, norm: &Normalization) -> f64 {
    let lambda = sol.lambda_or_zero();
    let p1 = apply_division(&norm.to_normalized(c.x1), lambda);
    let p2 = apply_division(&norm.to_normalized(c.x2), lambda);
    p2.dot(&(sol.fundamental * p1))
}

/// Squared Sampson distance in pixels^2.
///
/// The residual is linearized with respect to the observed (distorted)
/// coordinates, so the distance lives in the measured image. With
/// `lambda = 0` this is the usual pinhole Sampson distance.
pub fn sampson_distance(sol: &PoseSolution, c: &Correspondence, norm: &Normalization) -> Result<f64> {
    let lambda = sol.lambda_or_zero();
    let x1 = norm.to_normalized(c.x1);
    let x2 = norm.to_normalized(c.x2);
    let p1 = apply_division(&x1, lambda);
    let p2 = apply_division(&x2, lambda);
    let fx1 = sol.fundamental * p1;
    let ftx2 = sol.fundamental.transpose() * p2;
    // d p / d(x, y) = [e_x + 2 lambda x e_z, e_y + 2 lambda y e_z]
    let grads = [
        fx1.x + 2.0 * lambda * x2.x * fx1.z,
        fx1.y + 2.0 * lambda * x2.y * fx1.z,
        ftx2.x + 2.0 * lambda * x1.x * ftx2.z,
        ftx2.y + 2.0 * lambda * x1.y * ftx2.z,
    ];
    if grads.iter().all(|g| g.abs() < TINY) {
        return Err(Error::DegenerateJacobian);
    }
    let err = p2.dot(&fx1);
    let denom: f64 = grads.iter().map(|g| g * g).sum();
    Ok(err * err / denom * norm.scale * norm.scale)
}

/// `R2 * R1^T`: rotation taking view-1 camera coordinates to view-2.
pub fn relative_rotation(r1: &RotationMat, r2: &RotationMat) -> RotationMat {
    r2 * r1.inverse()
}

/// Depths of the midpoint triangulation of one correspondence, `(z1, z2)`.
/// `None` when the two rays are parallel.
pub fn triangulate_depths(
    sol: &PoseSolution,
    c: &Correspondence,
    norm: &Normalization,
) -> Option<(f64, f64)> {
    let lambda = sol.lambda_or_zero();
    let r1 = back_project(&norm.to_normalized(c.x1), sol.w, lambda);
    let r2 = back_project(&norm.to_normalized(c.x2), sol.w, lambda);
    if r1.z.abs() < TINY || r2.z.abs() < TINY {
        return None;
    }
    let d1 = r1 / r1.z;
    let d2 = r2 / r2.z;

    // Camera 2 centre and ray direction expressed in the camera-1 frame.
    let rt = sol.rotation.inverse();
    let c2 = -(rt * sol.t);
    let e2 = rt * d2;

    let a11 = d1.dot(&d1);
    let a12 = d1.dot(&e2);
    let a22 = e2.dot(&e2);
    let det = a11 * a22 - a12 * a12;
    if det.abs() <= 1e-12 * a11 * a22 {
        return None;
    }
    let b1 = d1.dot(&c2);
    let b2 = e2.dot(&c2);
    let alpha = (b1 * a22 - a12 * b2) / det;
    let beta = (a12 * b1 - a11 * b2) / det;
    let mid = (d1 * alpha + c2 + e2 * beta) * 0.5;
    let z2 = (sol.rotation * mid + sol.t).z;
    Some((mid.z, z2))
}

/// Number of correspondences whose midpoint triangulation lies in front of
/// both cameras.
pub fn cheirality_inliers(sol: &PoseSolution, corrs: &[Correspondence], norm: &Normalization) -> usize {
    corrs
        .iter()
        .filter(|c| matches!(triangulate_depths(sol, c, norm), Some((z1, z2)) if z1 > 0.0 && z2 > 0.0))
        .count()
}

/// Picks the sign of `t` with more points in front of both cameras.
pub fn disambiguate_sign(
    sol: &PoseSolution,
    corrs: &[Correspondence],
    norm: &Normalization,
) -> (PoseSolution, usize) {
    let pos = cheirality_inliers(sol, corrs, norm);
    let flipped = sol.flipped();
    let neg = cheirality_inliers(&flipped, corrs, norm);
    if neg > pos {
        (flipped, neg)
    } else {
        (sol.clone(), pos)
    }
}
