use super::{Diagnostics, MinimalProblem, SolverOutput};
use crate::error::{Error, Result};
use crate::geom::{back_project, fundamental_from_params};

/// Translation direction for a calibrated camera from two correspondences.
///
/// `focal_px` and `lambda` (normalized frame) are the known intrinsics. The
/// two epipolar rows `(R r_i) x r'_i` must span a plane; `t` is their cross
/// product. Both signs are returned, cheirality is left to the caller.
pub fn solve_2pt_calibrated(problem: &MinimalProblem, focal_px: f64, lambda: f64) -> Result<SolverOutput> {
    problem.expect_len(2)?;
    if !(focal_px > 0.0) {
        return Err(Error::InvalidConfig("focal length must be positive".into()));
    }
    let w = problem.norm.inverse_focal(focal_px);
    let rows: Vec<_> = problem
        .corrs
        .iter()
        .map(|c| {
            let n = problem.norm.correspondence(c);
            let r1 = back_project(&n.x1, w, lambda);
            let r2 = back_project(&n.x2, w, lambda);
            (problem.rotation * r1).cross(&r2)
        })
        .collect();

    let t = rows[0].cross(&rows[1]);
    let scale = rows[0].norm() * rows[1].norm();
    if scale == 0.0 || t.norm() <= 1e-12 * scale {
        return Err(Error::DegenerateSample("epipolar rows are parallel"));
    }
    let sol = fundamental_from_params(w, Some(lambda), &problem.rotation, &t)?;
    let diag = Diagnostics {
        max_residual: problem.max_residual(&sol),
        null_residual: 0.0,
    };
    let flipped = sol.flipped();
    Ok(SolverOutput::from_unsorted(vec![(sol, diag), (flipped, diag)], 1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{Correspondence, Normalization, RotationMat};
    use crate::solvers::MinimalProblem;
    use approx::assert_relative_eq;

    #[test]
    fn hand_evaluated_rows() {
        let p = MinimalProblem::new(
            vec![Correspondence::new(0.0, 0.0, 1.0, 0.0), Correspondence::new(0.0, 1.0, 1.0, 1.0)],
            RotationMat::identity(),
            Normalization::new(1.0),
        );
        let out = solve_2pt_calibrated(&p, 1.0, 0.0).unwrap();
        assert_eq!(out.len(), 2);
        assert_relative_eq!(out.solutions[0].t.x.abs(), 1.0, epsilon = 1e-15);
        assert_relative_eq!(out.solutions[0].t, -out.solutions[1].t);
        assert!(out.diagnostics[0].max_residual < 1e-15);
    }

    #[test]
    fn no_parallax_is_degenerate() {
        let c = Correspondence::new(0.2, 0.1, 0.2, 0.1);
        let d = Correspondence::new(-0.3, 0.4, -0.3, 0.4);
        let p = MinimalProblem::new(vec![c, d], RotationMat::identity(), Normalization::new(1.0));
        assert!(matches!(solve_2pt_calibrated(&p, 1.0, 0.0), Err(Error::DegenerateSample(_))));
    }

    #[test]
    fn wrong_size() {
        let p = MinimalProblem::new(vec![], RotationMat::identity(), Normalization::new(1.0));
        assert!(matches!(solve_2pt_calibrated(&p, 1.0, 0.0), Err(Error::WrongSampleSize { .. })));
    }
}
