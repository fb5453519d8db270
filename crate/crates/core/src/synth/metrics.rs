use serde::{Deserialize, Serialize};

use super::scene::GroundTruth;
use crate::geom::{Mat3, Normalization, PoseSolution, RotationMat, Vec3};

/// Floor applied to the fundamental-matrix distance before taking `log10`.
pub const E_F_FLOOR: f64 = 1e-20;

/// Pose errors of an estimate against ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// Rotation error, degrees.
    pub e_r: f64,
    /// Translation direction error folded over the sign, degrees.
    pub e_t: f64,
    /// Relative focal error.
    pub e_f: f64,
    /// `log10` of the sign-folded distance of Frobenius-normalized F.
    pub e_fund: f64,
}

fn clamped_acos(x: f64) -> f64 {
    x.clamp(-1.0, 1.0).acos()
}

pub fn rotation_error_deg(gt: &RotationMat, est: &RotationMat) -> f64 {
    let tr = (gt.matrix() * est.matrix().transpose()).trace();
    clamped_acos((tr - 1.0) / 2.0).to_degrees()
}

pub fn translation_error_deg(gt: &Vec3, est: &Vec3) -> f64 {
    let c = gt.dot(est) / (gt.norm() * est.norm());
    clamped_acos(c.abs()).to_degrees()
}

pub fn fundamental_error(gt: &Mat3, est: &Mat3) -> f64 {
    let a = gt / gt.norm();
    let b = est / est.norm();
    let d = (b - a).norm().min((b + a).norm());
    d.max(E_F_FLOOR).log10()
}

pub fn compute_metrics(gt: &GroundTruth, sol: &PoseSolution, norm: &Normalization) -> Metrics {
    let gt_sol = gt.solution(norm);
    let f_est = sol.focal_px(norm);
    Metrics {
        e_r: rotation_error_deg(&gt.rotation, &sol.rotation),
        e_t: translation_error_deg(&gt.t, &sol.t),
        e_f: (gt.focal_px - f_est).abs() / gt.focal_px,
        e_fund: fundamental_error(&gt_sol.fundamental, &sol.fundamental),
    }
}


#[cfg(test)]
mod props {
    use super::*;
    use proptest::prelude::*;

    fn rotation() -> impl Strategy<Value = RotationMat> {
        prop::array::uniform3(-3.0f64..3.0).prop_map(|a| RotationMat::from_scaled_axis(Vec3::from(a)))
    }

    fn vec3() -> impl Strategy<Value = Vec3> {
        prop::array::uniform3(-5.0f64..5.0).prop_map(Vec3::from).prop_filter("nonzero", |v| v.norm() > 1e-3)
    }

    proptest! {
        #[test]
        fn rotation_error_is_symmetric(a in rotation(), b in rotation()) {
            prop_assert!((rotation_error_deg(&a, &b) - rotation_error_deg(&b, &a)).abs() < 1e-9);
            prop_assert!(rotation_error_deg(&a, &a) < 1e-5);
        }

        #[test]
        fn translation_error_is_symmetric_and_sign_folded(a in vec3(), b in vec3(), s in 0.1f64..10.0) {
            let e = translation_error_deg(&a, &b);
            prop_assert!((e - translation_error_deg(&b, &a)).abs() < 1e-9);
            prop_assert!((e - translation_error_deg(&a, &(-b * s))).abs() < 1e-6);
            prop_assert!((0.0..=90.0).contains(&e));
        }

        #[test]
        fn fundamental_error_is_symmetric_and_scale_free(m in prop::array::uniform9(-1.0f64..1.0), n in prop::array::uniform9(-1.0f64..1.0), s in -10.0f64..10.0) {
            prop_assume!(s.abs() > 0.1);
            let (a, b) = (Mat3::from_row_slice(&m), Mat3::from_row_slice(&n));
            prop_assume!(a.norm() > 0.1 && b.norm() > 0.1);
            let e = fundamental_error(&a, &b);
            prop_assert!((e - fundamental_error(&b, &a)).abs() < 1e-9);
            prop_assert!((e - fundamental_error(&a, &(b * s))).abs() < 1e-9);
            prop_assert!(fundamental_error(&a, &(a * s)) < -14.0);
        }
    }
}
