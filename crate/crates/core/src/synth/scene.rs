use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{fundamental_from_params, Correspondence, Normalization, PoseSolution, RotationMat, Vec2, Vec3};

const MAX_PLACEMENTS: usize = 1000;
const DRAWS_PER_POINT: usize = 1000;

/// Synthetic scene and camera distribution.
///
/// Scene points are uniform in the box `x_range x y_range x z_range`, with
/// `y` the depth axis. Camera 1 sits near the origin; camera 2 is displaced
/// by a baseline of uniform length in a uniform direction. Both look towards
/// a jittered point inside the box with a uniformly random roll.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneConfig {
    pub x_range: [f64; 2],
    pub y_range: [f64; 2],
    pub z_range: [f64; 2],
    /// Focal length range in pixels.
    pub f_range: [f64; 2],
    /// Division-model coefficient range, normalized units.
    pub lambda_range: [f64; 2],
    pub n_points: usize,
    /// Image width and height in pixels.
    pub image_size: [f64; 2],
    /// Baseline length range in scene units.
    pub baseline_range: [f64; 2],
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            x_range: [-3.0, 3.0],
            y_range: [3.0, 8.0],
            z_range: [-3.0, 3.0],
            f_range: [300.0, 3000.0],
            lambda_range: [-0.9, 0.0],
            n_points: 100,
            image_size: [1080.0, 1080.0],
            baseline_range: [0.1, 2.0],
        }
    }
}

impl SceneConfig {
    pub fn with_points(mut self, n: usize) -> Self {
        self.n_points = n;
        self
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda_range = [lambda, lambda];
        self
    }

    pub fn normalization(&self) -> Normalization {
        Normalization::for_image(self.image_size[0], self.image_size[1])
    }

    pub fn validate(&self) -> Result<()> {
        let ranges = [
            ("x_range", self.x_range),
            ("y_range", self.y_range),
            ("z_range", self.z_range),
            ("f_range", self.f_range),
            ("lambda_range", self.lambda_range),
            ("baseline_range", self.baseline_range),
        ];
        for (name, [lo, hi]) in ranges {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::InvalidConfig(format!("{name}: need finite lo <= hi")));
            }
        }
        if self.f_range[0] <= 0.0 {
            return Err(Error::InvalidConfig("f_range: focal lengths must be positive".into()));
        }
        if self.baseline_range[0] <= 0.0 {
            return Err(Error::InvalidConfig("baseline_range: baseline must be positive".into()));
        }
        if !(self.image_size[0] > 0.0 && self.image_size[1] > 0.0) {
            return Err(Error::InvalidConfig("image_size: must be positive".into()));
        }
        if self.n_points == 0 {
            return Err(Error::InvalidConfig("n_points: must be at least 1".into()));
        }
        Ok(())
    }
}

/// World-to-camera pose: `X_cam = rotation (X_world - center)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraPose {
    pub rotation: RotationMat,
    pub center: Vec3,
}

impl CameraPose {
    pub fn to_camera(&self, x: &Vec3) -> Vec3 {
        self.rotation * (x - self.center)
    }
}

/// Ground truth of one two-view instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    /// Relative rotation `R2 R1^T`.
    pub rotation: RotationMat,
    /// Relative translation `R2 (C1 - C2)`, unit length.
    pub t: Vec3,
    pub focal_px: f64,
    /// Normalized units.
    pub lambda: f64,
}

impl GroundTruth {
    pub fn solution(&self, norm: &Normalization) -> PoseSolution {
        fundamental_from_params(norm.inverse_focal(self.focal_px), Some(self.lambda), &self.rotation, &self.t)
            .expect("ground truth has nonzero translation and focal length")
    }
}

/// A generated two-view instance. Correspondences are in pixels relative to
/// the image centre, with the division-model distortion applied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub gt: GroundTruth,
    pub corrs: Vec<Correspondence>,
    pub points: Vec<Vec3>,
    pub cameras: [CameraPose; 2],
    pub norm: Normalization,
    pub image_size: [f64; 2],
}

/// Distorted radius for an undistorted radius under the division model:
/// the root of `lambda r_u r_d^2 - r_d + r_u = 0` that tends to `r_u` as
/// `lambda -> 0`. `None` when no such radius exists.
pub fn distort_radius(r_u: f64, lambda: f64) -> Option<f64> {
    let disc = 1.0 - 4.0 * lambda * r_u * r_u;
    if disc < 0.0 {
        return None;
    }
    Some(2.0 * r_u / (1.0 + disc.sqrt()))
}

/// Observed normalized point for an undistorted normalized point.
pub fn distort_point(x_u: &Vec2, lambda: f64) -> Option<Vec2> {
    let r_u = x_u.norm();
    if r_u == 0.0 || lambda == 0.0 {
        return Some(*x_u);
    }
    distort_radius(r_u, lambda).map(|r_d| x_u * (r_d / r_u))
}

fn uniform(rng: &mut impl Rng, [lo, hi]: [f64; 2]) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..hi)
    }
}

pub(crate) fn random_unit(rng: &mut impl Rng) -> Vec3 {
    loop {
        let v = Vec3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        let n = v.norm();
        if n > 1e-3 && n <= 1.0 {
            return v / n;
        }
    }
}

/// World-to-camera rotation whose optical axis points along `forward`,
/// rolled by `roll` about it.
fn look_along(forward: &Vec3, roll: f64) -> RotationMat {
    let z = forward.normalize();
    let helper = if z.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    let x = helper.cross(&z).normalize();
    let y = z.cross(&x);
    let cam_to_world = RotationMat::from_matrix_unchecked(nalgebra::Matrix3::from_columns(&[x, y, z]));
    let roll = RotationMat::from_axis_angle(&Vec3::z_axis(), roll);
    roll * cam_to_world.inverse()
}

/// How camera 2 is oriented.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Placement {
    /// Both cameras face the scene independently.
    Random,
    /// Camera 2 rotation is `relative * R1` (e.g. from a gyro trajectory).
    FixedRelative(RotationMat),
}

struct Cams {
    poses: [CameraPose; 2],
}

fn place_cameras(cfg: &SceneConfig, placement: Placement, rng: &mut impl Rng) -> Cams {
    let centre = Vec3::new(
        0.5 * (cfg.x_range[0] + cfg.x_range[1]),
        0.5 * (cfg.y_range[0] + cfg.y_range[1]),
        0.5 * (cfg.z_range[0] + cfg.z_range[1]),
    );
    let jitter = |rng: &mut _| {
        Vec3::new(
            uniform(rng, [-1.0, 1.0]),
            uniform(rng, [-1.0, 1.0]),
            uniform(rng, [-1.0, 1.0]),
        )
    };
    let c1 = Vec3::new(uniform(rng, [-0.5, 0.5]), 0.0, uniform(rng, [-0.5, 0.5]));
    let c2 = c1 + random_unit(rng) * uniform(rng, cfg.baseline_range);
    let r1 = look_along(&(centre + jitter(rng) - c1), uniform(rng, [0.0, std::f64::consts::TAU]));
    let r2 = match placement {
        Placement::Random => look_along(&(centre + jitter(rng) - c2), uniform(rng, [0.0, std::f64::consts::TAU])),
        Placement::FixedRelative(rel) => rel * r1,
    };
    Cams {
        poses: [
            CameraPose { rotation: r1, center: c1 },
            CameraPose { rotation: r2, center: c2 },
        ],
    }
}

fn observe(cam: &CameraPose, x: &Vec3, f_norm: f64, lambda: f64, half: &[f64; 2], norm: &Normalization) -> Option<Vec2> {
    let xc = cam.to_camera(x);
    if xc.z <= 1e-6 {
        return None;
    }
    let x_u = Vec2::new(xc.x / xc.z, xc.y / xc.z) * f_norm;
    let x_d = distort_point(&x_u, lambda)?;
    let px = norm.to_pixels(x_d);
    (px.x.abs() <= half[0] && px.y.abs() <= half[1]).then_some(px)
}

/// Generates a random two-view instance with all points visible and in
/// front of both cameras.
pub fn generate_instance(cfg: &SceneConfig, rng: &mut impl Rng) -> Result<Instance> {
    generate_instance_with(cfg, Placement::Random, rng)
}

/// [`generate_instance`] with an explicit camera-2 placement.
pub fn generate_instance_with(cfg: &SceneConfig, placement: Placement, rng: &mut impl Rng) -> Result<Instance> {
    cfg.validate()?;
    let norm = cfg.normalization();
    let half = [cfg.image_size[0] / 2.0, cfg.image_size[1] / 2.0];
    let focal_px = uniform(rng, cfg.f_range);
    let lambda = uniform(rng, cfg.lambda_range);
    let f_norm = focal_px / norm.scale;

    'placement: for _ in 0..MAX_PLACEMENTS {
        let cams = place_cameras(cfg, placement, rng);
        let [cam1, cam2] = cams.poses;
        let mut points = Vec::with_capacity(cfg.n_points);
        let mut corrs = Vec::with_capacity(cfg.n_points);
        let mut draws = 0;
        while points.len() < cfg.n_points {
            draws += 1;
            if draws > DRAWS_PER_POINT * cfg.n_points.max(10) {
                continue 'placement;
            }
            let x = Vec3::new(
                uniform(rng, cfg.x_range),
                uniform(rng, cfg.y_range),
                uniform(rng, cfg.z_range),
            );
            let (Some(p1), Some(p2)) = (
                observe(&cam1, &x, f_norm, lambda, &half, &norm),
                observe(&cam2, &x, f_norm, lambda, &half, &norm),
            ) else {
                continue;
            };
            points.push(x);
            corrs.push(Correspondence { x1: p1, x2: p2 });
        }

        let rotation = cam2.rotation * cam1.rotation.inverse();
        let t = cam2.rotation * (cam1.center - cam2.center);
        let gt = GroundTruth {
            rotation,
            t: t.normalize(),
            focal_px,
            lambda,
        };
        return Ok(Instance {
            gt,
            corrs,
            points,
            cameras: [cam1, cam2],
            norm,
            image_size: cfg.image_size,
        });
    }
    Err(Error::GenerationFailed(MAX_PLACEMENTS))
}
