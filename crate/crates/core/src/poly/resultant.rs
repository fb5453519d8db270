//! Sylvester-resultant elimination for two-variable systems and the
//! verified root recovery built on top of it.

use nalgebra::DMatrix;

use super::{uni_roots, BiPoly, UniPoly, Var, TRIM_TOL};
use crate::error::{Error, Result};

/// Half-width of the Chebyshev sampling interval `[-R, R]` in the kept variable.
pub const SAMPLE_RADIUS: f64 = 2.0;
/// A Sylvester matrix whose `sigma_min / sigma_max` stays below this at every
/// sample is treated as singular (the inputs share a factor).
const ZERO_RESULTANT_TOL: f64 = 1e-13;
const SATURATION_TOL: f64 = 1e-12;
const MAX_REFINE_STEPS: usize = 10;
/// Scaled sum of squares at which refinement stops (residuals near rounding).
const CONVERGED_COST: f64 = 1e-32;
/// Roots closer than this (relative) are merged.
const DEDUP_TOL: f64 = 1e-4;

fn other(var: Var) -> Var {
    match var {
        Var::W => Var::Lambda,
        Var::Lambda => Var::W,
    }
}

/// Degree of `p` in `var`, ignoring trailing slices that vanish relative to
/// the largest coefficient.
fn effective_degree(p: &BiPoly, var: Var) -> usize {
    let limit = TRIM_TOL * p.max_abs();
    let mut d = p.degree_in(var);
    while d > 0 && p.coefficient_of(var, d).coeffs().iter().all(|c| c.abs() <= limit) {
        d -= 1;
    }
    d
}

fn effective_total_degree(p: &BiPoly) -> usize {
    let limit = TRIM_TOL * p.max_abs();
    p.coefficients()
        .filter(|&(_, v)| v.abs() > limit)
        .map(|((i, j), _)| i + j)
        .max()
        .unwrap_or(0)
}

/// Sylvester matrix of `a` (degree m) and `b` (degree n), coefficients ascending.
fn sylvester_matrix(a: &[f64], b: &[f64]) -> DMatrix<f64> {
    let m = a.len() - 1;
    let n = b.len() - 1;
    let size = m + n;
    let mut s = DMatrix::zeros(size, size);
    for row in 0..n {
        for (k, &v) in a.iter().rev().enumerate() {
            s[(row, row + k)] = v;
        }
    }
    for row in 0..m {
        for (k, &v) in b.iter().rev().enumerate() {
            s[(n + row, row + k)] = v;
        }
    }
    s
}

/// Converts values at Chebyshev nodes of `[-radius, radius]` into monomial
/// coefficients of the interpolating polynomial.
fn chebyshev_interpolate(values: &[f64], radius: f64) -> Vec<f64> {
    let n = values.len();
    let nodes: Vec<f64> = (0..n)
        .map(|k| (std::f64::consts::PI * (k as f64 + 0.5) / n as f64).cos())
        .collect();

    // Chebyshev coefficients a_j of sum a_j T_j(u)
    let mut cheb = vec![0.0; n];
    for (j, a) in cheb.iter_mut().enumerate() {
        let s: f64 = values
            .iter()
            .zip(&nodes)
            .map(|(v, &u)| v * (j as f64 * u.acos()).cos())
            .sum();
        *a = 2.0 * s / n as f64;
    }
    cheb[0] *= 0.5;

    // Monomial coefficients in u via T_{j+1} = 2u T_j - T_{j-1}
    let mut mono = vec![0.0; n];
    let mut t_prev = vec![0.0; n];
    let mut t_cur = vec![0.0; n];
    t_prev[0] = 1.0;
    mono[0] = cheb[0];
    if n > 1 {
        t_cur[1] = 1.0;
        mono[1] += cheb[1];
    }
    for &a in cheb.iter().skip(2) {
        let mut next = vec![0.0; n];
        for i in 0..n {
            let shifted = if i > 0 { 2.0 * t_cur[i - 1] } else { 0.0 };
            next[i] = shifted - t_prev[i];
        }
        for (m, &t) in mono.iter_mut().zip(next.iter()) {
            *m += a * t;
        }
        t_prev = std::mem::replace(&mut t_cur, next);
    }

    // u = x / radius
    let mut scale = 1.0;
    for m in mono.iter_mut() {
        *m *= scale;
        scale /= radius;
    }
    mono
}

/// Resultant of `p` and `q` with respect to `eliminate`, as a polynomial in
/// the remaining variable.
///
/// The determinant of the Sylvester matrix is sampled at Chebyshev nodes of
/// the kept variable on `[-2, 2]` and interpolated; the number of nodes is
/// one more than a degree bound derived from the inputs. Negligible leading
/// coefficients are trimmed. If the Sylvester matrix is numerically singular
/// at every node the inputs share a factor and [`Error::ZeroResultant`] is
/// returned.
pub fn sylvester_resultant(p: &BiPoly, q: &BiPoly, eliminate: Var) -> Result<UniPoly> {
    sylvester_resultant_on(p, q, eliminate, SAMPLE_RADIUS)
}

/// [`sylvester_resultant`] with an explicit sampling radius.
pub fn sylvester_resultant_on(p: &BiPoly, q: &BiPoly, eliminate: Var, radius: f64) -> Result<UniPoly> {
    let keep = other(eliminate);
    let m = effective_degree(p, eliminate);
    let n = effective_degree(q, eliminate);
    if m == 0 && n == 0 {
        return Err(Error::NotInEliminatedVariable);
    }
    let by_parts = m * effective_degree(q, keep) + n * effective_degree(p, keep);
    let by_total = effective_total_degree(p) * effective_total_degree(q);
    let bound = by_parts.min(by_total);
    let samples = bound + 1;

    let mut values = Vec::with_capacity(samples);
    let mut best_conditioning = 0.0f64;
    for k in 0..samples {
        let x = radius * (std::f64::consts::PI * (k as f64 + 0.5) / samples as f64).cos();
        let a = p.restrict(keep, x).into_coeffs();
        let b = q.restrict(keep, x).into_coeffs();
        let s = sylvester_matrix(&a[..=m], &b[..=n]);
        // a shared factor makes every node singular, so a few probes suffice
        if (k == 0 || k == samples / 2 || k + 1 == samples) && best_conditioning <= ZERO_RESULTANT_TOL {
            let sv = s.singular_values();
            let (lo, hi) = (sv.min(), sv.max());
            if hi > 0.0 {
                best_conditioning = best_conditioning.max(lo / hi);
            }
        }
        values.push(s.determinant());
    }

    let mut res = UniPoly::from_raw(chebyshev_interpolate(&values, radius));

    if best_conditioning <= ZERO_RESULTANT_TOL || !res.max_abs().is_finite() {
        return Err(Error::ZeroResultant);
    }
    res.trim(TRIM_TOL);
    Ok(res)
}

/// Options for [`bivariate_roots`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootOptions {
    /// Roots with `|w|` below this are the saturated `w = 0` family.
    pub w_min_abs: f64,
    /// Relative residual every input polynomial must meet at a root.
    pub verify_tol: f64,
    /// Candidates whose unpolished relative residual exceeds this are
    /// dropped without refinement.
    pub candidate_tol: f64,
    /// Gauss-Newton refinement on all polynomials before verification.
    pub polish: bool,
    /// Relative residual a polished root must reach; candidates that stall
    /// above it sit in a shallow valley next to a genuine root.
    pub polished_tol: f64,
}

impl Default for RootOptions {
    fn default() -> Self {
        Self {
            w_min_abs: 1e-8,
            verify_tol: 1e-6,
            candidate_tol: 0.3,
            polish: true,
            polished_tol: 1e-10,
        }
    }
}

/// Largest relative residual of `(w, lambda)` over all polynomials.
pub fn relative_residual(polys: &[BiPoly], w: f64, lambda: f64) -> f64 {
    polys
        .iter()
        .map(|p| {
            let s = p.eval_abs(w, lambda);
            if s == 0.0 {
                0.0
            } else {
                p.eval(w, lambda).abs() / s
            }
        })
        .fold(0.0, f64::max)
}

/// Up to `MAX_REFINE_STEPS` damped Gauss-Newton steps on the system with
/// each polynomial scaled by its evaluation magnitude at the current point;
/// a step is halved until the scaled sum of squares drops.
fn refine(polys: &[BiPoly], w: f64, lambda: f64) -> (f64, f64) {
    let (mut w, mut lambda) = (w, lambda);
    for _ in 0..MAX_REFINE_STEPS {
        let scales: Vec<f64> = polys.iter().map(|p| p.eval_abs(w, lambda)).collect();
        let cost = |w: f64, l: f64| -> f64 {
            polys
                .iter()
                .zip(&scales)
                .filter(|(_, &s)| s > 0.0)
                .map(|(p, &s)| (p.eval(w, l) / s).powi(2))
                .sum()
        };
        let (mut jtj, mut jtr) = ([[0.0; 2]; 2], [0.0; 2]);
        for (p, &s) in polys.iter().zip(&scales) {
            if s == 0.0 {
                continue;
            }
            let r = p.eval(w, lambda) / s;
            let (gw, gl) = p.gradient(w, lambda);
            let g = [gw / s, gl / s];
            for i in 0..2 {
                jtr[i] += g[i] * r;
                for j in 0..2 {
                    jtj[i][j] += g[i] * g[j];
                }
            }
        }
        let det = jtj[0][0] * jtj[1][1] - jtj[0][1] * jtj[1][0];
        if det == 0.0 || !det.is_finite() {
            break;
        }
        let dw = (jtr[0] * jtj[1][1] - jtj[0][1] * jtr[1]) / det;
        let dl = (jtj[0][0] * jtr[1] - jtr[0] * jtj[1][0]) / det;
        let current = cost(w, lambda);
        if current <= CONVERGED_COST {
            break;
        }
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..8 {
            let (nw, nl) = (w - step * dw, lambda - step * dl);
            if cost(nw, nl) < current {
                (w, lambda) = (nw, nl);
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    (w, lambda)
}

fn is_duplicate(found: &[(f64, f64, f64)], w: f64, lambda: f64) -> bool {
    found.iter().any(|&(fw, fl, _)| {
        (fw - w).abs() <= DEDUP_TOL * (1.0 + w.abs()) && (fl - lambda).abs() <= DEDUP_TOL * (1.0 + lambda.abs())
    })
}

fn lambda_candidates(p: &BiPoly, w: f64) -> Vec<f64> {
    let mut u = p.restrict(Var::W, w);
    u.trim(TRIM_TOL);
    if u.degree() == 0 {
        return vec![];
    }
    uni_roots(&u).unwrap_or_default()
}

/// Common real roots `(w, lambda)` of a system of bivariate polynomials.
///
/// Every polynomial is saturated by its `w^k` factor and scaled to unit
/// coefficient norm, so the result does not depend on input scaling. For each pair in
/// `pairs`, `lambda` is eliminated by a resultant whose real roots give
/// candidate `w`; `lambda` candidates are the real roots of both pair members
/// restricted to that `w`. A candidate survives only if *every* polynomial
/// vanishes there to `verify_tol` relative to its evaluation magnitude.
/// Candidates from all pairs are pooled and duplicates merged, so extra pairs
/// only add robustness against roots lost in one ill-conditioned resultant.
/// Fails with [`Error::ZeroResultant`] when every pair shares a factor.
pub fn bivariate_roots(polys: &[BiPoly], pairs: &[(usize, usize)], opts: &RootOptions) -> Result<Vec<(f64, f64)>> {
    if pairs.is_empty() || pairs.iter().any(|&(a, b)| a == b || a >= polys.len() || b >= polys.len()) {
        return Err(Error::InvalidConfig("need pairs of distinct polynomial indices".into()));
    }

    let saturated: Vec<BiPoly> = polys
        .iter()
        .map(|p| {
            let mut p = p.clone();
            p.saturate_w(SATURATION_TOL);
            let n = p.norm();
            if n > 0.0 && n.is_finite() {
                p.scale(1.0 / n)
            } else {
                p
            }
        })
        .collect();

    let mut out: Vec<(f64, f64, f64)> = Vec::new();
    let mut any_resultant = false;
    for &(ia, ib) in pairs {
        let (p, q) = (&saturated[ia], &saturated[ib]);
        let mut res = match sylvester_resultant(p, q, Var::Lambda) {
            Ok(r) => r,
            Err(Error::ZeroResultant) => continue,
            Err(e) => return Err(e),
        };
        any_resultant = true;
        res.deflate_zero_roots(SATURATION_TOL);
        let ws = match uni_roots(&res) {
            Ok(r) => r,
            Err(Error::ConstantPolynomial) => vec![],
            Err(e) => return Err(e),
        };
        for w in ws.into_iter().filter(|w| w.abs() >= opts.w_min_abs && w.is_finite()) {
            let mut cands = lambda_candidates(p, w);
            cands.extend(lambda_candidates(q, w));
            for lambda in cands {
                if is_duplicate(&out, w, lambda) || relative_residual(&saturated, w, lambda) > opts.candidate_tol {
                    continue;
                }
                let (w, lambda, tol) = if opts.polish {
                    let (w, lambda) = refine(&saturated, w, lambda);
                    (w, lambda, opts.verify_tol.min(opts.polished_tol))
                } else {
                    (w, lambda, opts.verify_tol)
                };
                let r = relative_residual(&saturated, w, lambda);
                if r <= tol && w.abs() >= opts.w_min_abs {
                    out.push((w, lambda, r));
                }
            }
        }
    }
    if !any_resultant {
        return Err(Error::ZeroResultant);
    }

    // Merge duplicates, keeping the smaller residual.
    out.sort_by(|a, b| a.2.total_cmp(&b.2));
    let mut merged: Vec<(f64, f64, f64)> = Vec::new();
    for (w, l, r) in out {
        if !is_duplicate(&merged, w, l) {
            merged.push((w, l, r));
        }
    }
    let mut merged: Vec<(f64, f64)> = merged.into_iter().map(|(w, l, _)| (w, l)).collect();
    merged.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    Ok(merged)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn linear_pair_eliminating_lambda() {
        let p = BiPoly::linear(0.0, 1.0, -1.0); // w - lambda
        let q = BiPoly::linear(0.0, 1.0, 1.0); // w + lambda
        let r = sylvester_resultant(&p, &q, Var::Lambda).unwrap();
        assert_eq!(r.degree(), 1);
        assert!(r.coeffs()[0].abs() < 1e-14);
        assert_relative_eq!(r.coeffs()[1].abs(), 2.0, epsilon = 1e-13);
    }

    #[test]
    fn substitution_pair() {
        let p = BiPoly::from_grid(&[vec![0.0, 0.0, 1.0], vec![-1.0]]); // lambda^2 - w
        let q = BiPoly::linear(-1.0, 0.0, 1.0); // lambda - 1
        let r = sylvester_resultant(&p, &q, Var::Lambda).unwrap();
        assert_eq!(r.degree(), 1);
        assert_relative_eq!(r.eval(1.0), 0.0, epsilon = 1e-13);
        assert!(r.eval(0.0).abs() > 0.5);
    }

    #[test]
    fn shared_factor_is_zero_resultant() {
        let f = BiPoly::linear(1.0, 2.0, 3.0);
        let p = f.mul(&BiPoly::linear(0.0, 1.0, 1.0));
        let q = f.mul(&BiPoly::linear(2.0, -1.0, 1.0));
        assert_eq!(sylvester_resultant(&p, &q, Var::Lambda), Err(Error::ZeroResultant));
    }

    #[test]
    fn constant_in_both_is_rejected() {
        let p = BiPoly::linear(1.0, 1.0, 0.0);
        assert_eq!(sylvester_resultant(&p, &p, Var::Lambda), Err(Error::NotInEliminatedVariable));
    }

    #[test]
    fn decoupled_linear_system() {
        let a = BiPoly::linear(-1.0, 1.0, 0.0); // w - 1
        let b = BiPoly::linear(-2.0, 0.0, 1.0); // lambda - 2
        let sys = [a.clone(), b.clone(), a, b];
        let roots = bivariate_roots(&sys, &[(0, 1)], &RootOptions::default()).unwrap();
        assert_eq!(roots.len(), 1);
        assert_relative_eq!(roots[0].0, 1.0, epsilon = 1e-12);
        assert_relative_eq!(roots[0].1, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn chebyshev_interpolation_recovers_monomials() {
        let want = [0.5, -1.0, 2.0, 0.25, -3.0, 1.0];
        let n = want.len();
        let vals: Vec<f64> = (0..n)
            .map(|k| {
                let x = 2.0 * (std::f64::consts::PI * (k as f64 + 0.5) / n as f64).cos();
                UniPoly::from_raw(want.to_vec()).eval(x)
            })
            .collect();
        let got = chebyshev_interpolate(&vals, 2.0);
        for (g, w) in got.iter().zip(want) {
            assert_relative_eq!(*g, w, epsilon = 1e-12);
        }
    }
}
