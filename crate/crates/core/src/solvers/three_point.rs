use super::{Diagnostics, MinimalProblem, SolverOutput};
use crate::error::{Error, Result};
use crate::geom::{fundamental_from_params, Mat3, Vec3};
use crate::poly::{quartic_roots, UniPoly};

type Quad = [f64; 3];

/// `M(w)` for three correspondences: each entry is `c0 + c1 w + c2 w^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolyMatrix3 {
    pub entries: [[Quad; 3]; 3],
}

impl PolyMatrix3 {
    pub fn entry(&self, row: usize, col: usize) -> UniPoly {
        UniPoly::from_raw(self.entries[row][col].to_vec())
    }

    pub fn eval(&self, w: f64) -> Mat3 {
        Mat3::from_fn(|i, j| {
            let c = self.entries[i][j];
            c[0] + w * (c[1] + w * c[2])
        })
    }
}

/// Rows `(R diag(w,w,1) x_i) x (diag(w,w,1) x'_i)` as quadratics in `w`.
///
/// With `R r = w R(x, y, 0) + R e3` and `r' = w (x', y', 0) + e3`, the
/// constant term of every row is the same vector `R e3 x e3`.
pub fn build_m_3pt(problem: &MinimalProblem) -> Result<PolyMatrix3> {
    problem.expect_len(3)?;
    let rot = problem.rotation.matrix();
    let e3 = Vec3::z();
    let r_e3 = rot * e3;
    let constant = r_e3.cross(&e3);
    let mut entries = [[[0.0; 3]; 3]; 3];
    for (row, c) in problem.corrs.iter().enumerate() {
        let n = problem.norm.correspondence(c);
        let a = rot * Vec3::new(n.x1.x, n.x1.y, 0.0);
        let b = Vec3::new(n.x2.x, n.x2.y, 0.0);
        let linear = a.cross(&e3) + r_e3.cross(&b);
        let quad = a.cross(&b);
        for col in 0..3 {
            entries[row][col] = [constant[col], linear[col], quad[col]];
        }
    }
    Ok(PolyMatrix3 { entries })
}

fn mul2(a: &Quad, b: &Quad) -> [f64; 5] {
    [
        a[0] * b[0],
        a[0] * b[1] + a[1] * b[0],
        a[0] * b[2] + a[1] * b[1] + a[2] * b[0],
        a[1] * b[2] + a[2] * b[1],
        a[2] * b[2],
    ]
}

fn mul4(a: &Quad, b: &[f64; 5]) -> [f64; 7] {
    let mut out = [0.0; 7];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn minor(m: &[[Quad; 3]; 3], r: (usize, usize), c: (usize, usize)) -> [f64; 5] {
    let p = mul2(&m[r.0][c.0], &m[r.1][c.1]);
    let q = mul2(&m[r.0][c.1], &m[r.1][c.0]);
    std::array::from_fn(|k| p[k] - q[k])
}

/// `det M(w)` as a degree-6 polynomial, coefficients ascending.
pub fn det_m_3pt(m: &PolyMatrix3) -> [f64; 7] {
    let e = &m.entries;
    let t0 = mul4(&e[0][0], &minor(e, (1, 2), (1, 2)));
    let t1 = mul4(&e[0][1], &minor(e, (1, 2), (0, 2)));
    let t2 = mul4(&e[0][2], &minor(e, (1, 2), (0, 1)));
    std::array::from_fn(|k| t0[k] - t1[k] + t2[k])
}

/// Null direction of a rank-2 3x3 matrix: the cross product of the row pair
/// with the largest cross-product norm.
pub(crate) fn null_vector_3x3(m: &Mat3) -> Option<Vec3> {
    let rows = [m.row(0).transpose(), m.row(1).transpose(), m.row(2).transpose()];
    let mut cands = [rows[0].cross(&rows[1]), rows[0].cross(&rows[2]), rows[1].cross(&rows[2])];
    cands.sort_by(|a, b| b.norm_squared().total_cmp(&a.norm_squared()));
    let best = cands[0].norm();
    let scale = rows.iter().map(|r| r.norm_squared()).fold(0.0, f64::max);
    if !(best > 1e-14 * scale) {
        return None;
    }
    Some(cands[0] / best)
}

/// Unknown shared focal length from three correspondences.
///
/// `det M(w) = w^2 q(w)` because the three rows share their constant term;
/// `q` is the quartic solved in closed form. Positive real roots are kept and
/// `t` is recovered as the null direction of `M(w*)`.
pub fn solve_3pt_focal(problem: &MinimalProblem) -> Result<SolverOutput> {
    let m = build_m_3pt(problem)?;
    let det = det_m_3pt(&m);

    let entry_scale = m
        .entries
        .iter()
        .flatten()
        .flatten()
        .fold(0.0f64, |a, v| a.max(v.abs()));
    let det_scale = det.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if entry_scale == 0.0 || det_scale <= 1e-12 * entry_scale.powi(3) {
        return Err(Error::DegenerateSample("det M(w) vanishes identically"));
    }

    let quartic = [det[2], det[3], det[4], det[5], det[6]];
    let roots = quartic_roots(quartic).map_err(|_| Error::DegenerateSample("det M(w) has no w-dependent part"))?;

    let real_roots = roots.len();
    let mut pairs = Vec::with_capacity(4);
    for w in roots.into_iter().filter(|&w| w > 1e-8 && w.is_finite()) {
        let mw = m.eval(w);
        let Some(t) = null_vector_3x3(&mw) else { continue };
        let null_residual = (mw * t).norm() / mw.norm();
        let Ok(sol) = fundamental_from_params(w, None, &problem.rotation, &t) else { continue };
        let max_residual = problem.max_residual(&sol);
        pairs.push((sol, Diagnostics { max_residual, null_residual }));
    }
    if pairs.is_empty() {
        return Err(Error::DegenerateSample("no positive real focal root"));
    }
    Ok(SolverOutput::from_unsorted(pairs, real_roots))
}
