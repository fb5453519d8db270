use nalgebra::Matrix4x3;

use super::{Diagnostics, MinimalProblem, SolverOutput};
use crate::error::{Error, Result};
use crate::geom::{fundamental_from_params, Vec3};
use crate::poly::{bivariate_roots, BiPoly, RootOptions};

/// Tuning for the 4-point solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FourPointOptions {
    pub roots: RootOptions,
    /// Number of minor pairs whose resultants contribute candidate roots,
    /// taken in order of decreasing coefficient-norm product (1 to 6).
    pub pairs: usize,
}

impl Default for FourPointOptions {
    fn default() -> Self {
        Self {
            roots: RootOptions::default(),
            pairs: 2,
        }
    }
}

/// `M(w, lambda)` for four correspondences under the division model.
///
/// Row `i` is `(R r_i) x r'_i` with `r = (w x, w y, 1 + lambda rho^2)`:
///
/// ```text
/// w^2        : R a x b
/// w          : R a x e3 (1 + lambda rho'^2) + R e3 x b (1 + lambda rho^2)
/// w^0        : (1 + lambda rho^2)(1 + lambda rho'^2) R e3 x e3
/// ```
///
/// where `a = (x, y, 0)`, `b = (x', y', 0)`.
pub fn build_m_4pt(problem: &MinimalProblem) -> Result<[[BiPoly; 3]; 4]> {
    problem.expect_len(4)?;
    let rot = problem.rotation.matrix();
    let e3 = Vec3::z();
    let r_e3 = rot * e3;
    let c = r_e3.cross(&e3);

    let rows: Vec<[BiPoly; 3]> = problem
        .corrs
        .iter()
        .map(|corr| {
            let n = problem.norm.correspondence(corr);
            let rho1 = n.x1.norm_squared();
            let rho2 = n.x2.norm_squared();
            let ra = rot * Vec3::new(n.x1.x, n.x1.y, 0.0);
            let b = Vec3::new(n.x2.x, n.x2.y, 0.0);
            let quad = ra.cross(&b);
            let u = ra.cross(&e3);
            let v = r_e3.cross(&b);
            std::array::from_fn(|k| {
                let mut p = BiPoly::zeros(2, 2);
                p.set(2, 0, quad[k]);
                p.set(1, 0, u[k] + v[k]);
                p.set(1, 1, rho2 * u[k] + rho1 * v[k]);
                p.set(0, 0, c[k]);
                p.set(0, 1, (rho1 + rho2) * c[k]);
                p.set(0, 2, rho1 * rho2 * c[k]);
                p
            })
        })
        .collect();
    Ok([rows[0].clone(), rows[1].clone(), rows[2].clone(), rows[3].clone()])
}

fn det3(rows: [&[BiPoly; 3]; 3]) -> BiPoly {
    let [r0, r1, r2] = rows;
    let m0 = r1[1].mul(&r2[2]).sub(&r1[2].mul(&r2[1]));
    let m1 = r1[0].mul(&r2[2]).sub(&r1[2].mul(&r2[0]));
    let m2 = r1[0].mul(&r2[1]).sub(&r1[1].mul(&r2[0]));
    r0[0].mul(&m0).sub(&r0[1].mul(&m1)).add(&r0[2].mul(&m2))
}

/// The four 3x3 minors of `M(w, lambda)`; minor `k` omits row `k`.
pub fn subdeterminants(m: &[[BiPoly; 3]; 4]) -> [BiPoly; 4] {
    std::array::from_fn(|skip| {
        let idx: Vec<usize> = (0..4).filter(|&r| r != skip).collect();
        det3([&m[idx[0]], &m[idx[1]], &m[idx[2]]])
    })
}

/// Unknown shared focal length and division-model distortion from four
/// correspondences.
pub fn solve_4pt_focal_distortion(problem: &MinimalProblem) -> Result<SolverOutput> {
    solve_4pt_with(problem, &FourPointOptions::default())
}

/// [`solve_4pt_focal_distortion`] with explicit options.
///
/// All four minors must vanish at a solution. They share a `w^2` factor (the
/// rows coincide up to scale at `w = 0`), which is divided out before
/// `lambda` is eliminated from the two minors with the largest coefficient
/// norm; the other two only serve to verify candidate roots.
pub fn solve_4pt_with(problem: &MinimalProblem, opts: &FourPointOptions) -> Result<SolverOutput> {
    let m = build_m_4pt(problem)?;
    let minors = subdeterminants(&m);

    let norms: Vec<f64> = minors.iter().map(BiPoly::norm).collect();
    if norms.iter().all(|&n| n == 0.0) {
        return Err(Error::DegenerateSample("all minors vanish identically"));
    }
    let mut pairs: Vec<(usize, usize)> = (0..4).flat_map(|a| (a + 1..4).map(move |b| (a, b))).collect();
    pairs.sort_by(|&(a, b), &(c, d)| (norms[c] * norms[d]).total_cmp(&(norms[a] * norms[b])));
    pairs.truncate(opts.pairs.clamp(1, 6));

    let roots = match bivariate_roots(&minors, &pairs, &opts.roots) {
        Ok(r) => r,
        Err(Error::ZeroResultant) => {
            // every chosen pair shares a factor; fall back to the rest
            let rest: Vec<(usize, usize)> = (0..4)
                .flat_map(|a| (a + 1..4).map(move |b| (a, b)))
                .filter(|p| !pairs.contains(p))
                .collect();
            if rest.is_empty() {
                return Err(Error::DegenerateSample("every resultant vanishes"));
            }
            bivariate_roots(&minors, &rest, &opts.roots)
                .map_err(|_| Error::DegenerateSample("every resultant vanishes"))?
        }
        Err(e) => return Err(e),
    };

    let real_roots = roots.len();
    let mut pairs = Vec::with_capacity(roots.len());
    for (w, lambda) in roots.into_iter().filter(|&(w, _)| w > opts.roots.w_min_abs) {
        let mw = Matrix4x3::from_fn(|i, j| m[i][j].eval(w, lambda));
        let svd = mw.svd(false, true);
        let Some(v_t) = svd.v_t else { continue };
        let (imin, smin) = svd
            .singular_values
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("three singular values");
        let t: Vec3 = v_t.row(imin).transpose();
        let Ok(sol) = fundamental_from_params(w, Some(lambda), &problem.rotation, &t) else { continue };
        let max_residual = problem.max_residual(&sol);
        let null_residual = smin / mw.norm();
        pairs.push((sol, Diagnostics { max_residual, null_residual }));
    }
    if pairs.is_empty() {
        return Err(Error::DegenerateSample("no verified root with positive focal length"));
    }
    Ok(SolverOutput::from_unsorted(pairs, real_roots))
}
