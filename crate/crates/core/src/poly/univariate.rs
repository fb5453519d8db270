use nalgebra::{DMatrix, Complex};
use nalgebra::linalg::{balancing, Schur};

use crate::error::{Error, Result};

/// Relative magnitude below which leading coefficients are trimmed.
pub const TRIM_TOL: f64 = 1e-10;

/// Dense univariate polynomial, coefficients ascending in degree.
#[derive(Debug, Clone, PartialEq)]
pub struct UniPoly {
    coeffs: Vec<f64>,
}

impl UniPoly {
    /// Builds a polynomial and trims negligible leading coefficients.
    pub fn new(coeffs: Vec<f64>) -> Self {
        let mut p = Self { coeffs };
        p.trim(TRIM_TOL);
        p
    }

    /// Keeps the coefficients exactly as given (no trimming).
    pub fn from_raw(coeffs: Vec<f64>) -> Self {
        Self { coeffs }
    }

    /// `prod (x - r)` over the given roots.
    pub fn from_roots(roots: &[f64]) -> Self {
        let mut c = vec![1.0];
        for &r in roots {
            let mut next = vec![0.0; c.len() + 1];
            for (i, &a) in c.iter().enumerate() {
                next[i + 1] += a;
                next[i] -= r * a;
            }
            c = next;
        }
        Self { coeffs: c }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    /// Effective degree; the zero polynomial reports 0.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    /// Drops leading coefficients with `|c| < tol * max|c|`.
    pub fn trim(&mut self, tol: f64) {
        let limit = tol * self.max_abs();
        while self.coeffs.len() > 1 && self.coeffs.last().is_some_and(|c| c.abs() <= limit) {
            self.coeffs.pop();
        }
        if self.coeffs.is_empty() {
            self.coeffs.push(0.0);
        }
    }

    /// Divides out `x^k` where the `k` lowest coefficients are below
    /// `tol * max|c|`. Returns `k`.
    pub fn deflate_zero_roots(&mut self, tol: f64) -> usize {
        let limit = tol * self.max_abs();
        let k = self
            .coeffs
            .iter()
            .take(self.coeffs.len().saturating_sub(1))
            .take_while(|c| c.abs() <= limit)
            .count();
        self.coeffs.drain(..k);
        k
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &a| acc * x + a)
    }

    /// Sum of `|c_i| |x|^i`, the natural magnitude of `p(x)` for residual checks.
    pub fn eval_abs(&self, x: f64) -> f64 {
        let ax = x.abs();
        self.coeffs.iter().rev().fold(0.0, |acc, &a| acc * ax + a.abs())
    }

    pub fn derivative(&self) -> Self {
        if self.coeffs.len() <= 1 {
            return Self { coeffs: vec![0.0] };
        }
        Self {
            coeffs: self.coeffs.iter().enumerate().skip(1).map(|(i, &c)| i as f64 * c).collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self { coeffs: out }
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let get = |v: &[f64], i: usize| v.get(i).copied().unwrap_or(0.0);
        Self {
            coeffs: (0..n).map(|i| get(&self.coeffs, i) + get(&other.coeffs, i)).collect(),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }
}

/// Real roots from the eigenvalues of the balanced companion matrix.
///
/// Eigenvalues whose imaginary part is below `1e-8 (1 + |re|)` are accepted
/// as real and refined with a guarded Newton step. Roots are sorted.
pub fn uni_roots(p: &UniPoly) -> Result<Vec<f64>> {
    if p.is_zero() {
        return Err(Error::AllZeroPolynomial);
    }
    let mut p = p.clone();
    p.trim(TRIM_TOL);
    let n = p.degree();
    if n == 0 {
        return Err(Error::ConstantPolynomial);
    }
    let c = p.coeffs();
    let lead = c[n];
    if n == 1 {
        return Ok(vec![-c[0] / lead]);
    }
    if n == 2 {
        return Ok(super::quartic::quadratic_roots(c[2], c[1], c[0]));
    }

    let mut companion = DMatrix::<f64>::zeros(n, n);
    for i in 1..n {
        companion[(i, i - 1)] = 1.0;
    }
    for i in 0..n {
        companion[(i, n - 1)] = -c[i] / lead;
    }
    balancing::balance_parlett_reinsch(&mut companion);

    let eig: Vec<Complex<f64>> = match Schur::try_new(companion, f64::EPSILON, 10_000) {
        Some(s) => s.complex_eigenvalues().iter().copied().collect(),
        None => return Ok(vec![]),
    };

    let dp = p.derivative();
    let mut roots: Vec<f64> = eig
        .into_iter()
        .filter(|z| z.im.abs() < 1e-8 * (1.0 + z.re.abs()))
        .map(|z| newton_refine(&p, &dp, z.re))
        .collect();
    roots.sort_by(f64::total_cmp);
    Ok(roots)
}

fn newton_refine(p: &UniPoly, dp: &UniPoly, mut x: f64) -> f64 {
    let mut fx = p.eval(x);
    for _ in 0..3 {
        let d = dp.eval(x);
        if d == 0.0 || fx == 0.0 {
            break;
        }
        let next = x - fx / d;
        let fn_ = p.eval(next);
        if fn_.abs() < fx.abs() {
            x = next;
            fx = fn_;
        } else {
            break;
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn sqrt_two() {
        let r = uni_roots(&UniPoly::new(vec![-2.0, 0.0, 1.0])).unwrap();
        assert_eq!(r.len(), 2);
        assert_relative_eq!(r[0], -2f64.sqrt(), epsilon = 1e-12);
        assert_relative_eq!(r[1], 2f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn wilkinson_eight() {
        let want: Vec<f64> = (1..=8).map(f64::from).collect();
        let r = uni_roots(&UniPoly::from_roots(&want)).unwrap();
        assert_eq!(r.len(), 8);
        for (got, want) in r.iter().zip(&want) {
            assert!((got - want).abs() < 1e-6, "{got} vs {want}");
        }
    }

    #[test]
    fn constant_is_error() {
        assert_eq!(uni_roots(&UniPoly::new(vec![3.0])), Err(Error::ConstantPolynomial));
        assert_eq!(uni_roots(&UniPoly::new(vec![0.0, 0.0])), Err(Error::AllZeroPolynomial));
    }

    #[test]
    fn trims_and_deflates() {
        let mut p = UniPoly::new(vec![0.0, 1e-20, 2.0, 1.0, 1e-15]);
        assert_eq!(p.degree(), 3);
        assert_eq!(p.deflate_zero_roots(1e-12), 2);
        assert_eq!(p.coeffs(), &[2.0, 1.0]);
    }

    #[test]
    fn complex_pair_is_dropped() {
        // (x^2 + 1)(x - 3)(x + 0.5)
        let p = UniPoly::new(vec![1.0, 0.0, 1.0]).mul(&UniPoly::from_roots(&[3.0, -0.5]));
        let r = uni_roots(&p).unwrap();
        assert_eq!(r.len(), 2);
        assert_relative_eq!(r[0], -0.5, epsilon = 1e-12);
        assert_relative_eq!(r[1], 3.0, epsilon = 1e-12);
    }
}
