//! Closed-form real roots of polynomials up to degree four.
//!
//! Coefficients are ascending: `c[0] + c[1] x + ... + c[4] x^4`. Leading
//! coefficients that are negligible relative to the largest one drop the
//! problem to the next lower degree.

use crate::error::{Error, Result};

const LEADING_TOL: f64 = 1e-12;
/// Relative residual a polished quartic root must reach.
const POLISHED_TOL: f64 = 1e-10;

fn max_abs(c: &[f64]) -> f64 {
    c.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

fn eval(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &a| acc * x + a)
}

fn eval_abs(c: &[f64], x: f64) -> f64 {
    let ax = x.abs();
    c.iter().rev().fold(0.0, |acc, &a| acc * ax + a.abs())
}

fn eval_with_derivative(c: &[f64], x: f64) -> (f64, f64) {
    let mut p = 0.0;
    let mut dp = 0.0;
    for &a in c.iter().rev() {
        dp = dp * x + p;
        p = p * x + a;
    }
    (p, dp)
}

/// Newton refinement that only accepts steps reducing the residual.
fn polish(c: &[f64], mut x: f64, steps: usize) -> f64 {
    let (mut p, _) = eval_with_derivative(c, x);
    for _ in 0..steps {
        let (_, dp) = eval_with_derivative(c, x);
        if dp == 0.0 || p == 0.0 {
            break;
        }
        let next = x - p / dp;
        let pn = eval(c, next);
        if pn.abs() < p.abs() {
            x = next;
            p = pn;
        } else {
            break;
        }
    }
    x
}

/// Real roots of `a x^2 + b x + c` with the cancellation-free formula.
/// A discriminant that is negative by rounding only counts as a double root.
pub fn quadratic_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    if a == 0.0 {
        return if b == 0.0 { vec![] } else { vec![-c / b] };
    }
    let disc = b * b - 4.0 * a * c;
    let scale = (b * b).max((4.0 * a * c).abs());
    if disc < 0.0 {
        if disc > -1e-14 * scale {
            let r = -b / (2.0 * a);
            return vec![r, r];
        }
        return vec![];
    }
    let sq = disc.sqrt();
    let q = -0.5 * (b + b.signum() * sq);
    if q == 0.0 {
        // b == 0 and c == 0
        return vec![0.0, 0.0];
    }
    let mut r = vec![q / a, c / q];
    r.sort_by(f64::total_cmp);
    r
}

/// Real roots of the monic cubic `x^3 + a x^2 + b x + c`.
fn monic_cubic_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    let q = (a * a - 3.0 * b) / 9.0;
    let r = (2.0 * a * a * a - 9.0 * a * b + 27.0 * c) / 54.0;
    let q3 = q * q * q;
    let shift = a / 3.0;
    if r * r < q3 {
        let theta = (r / q3.sqrt()).clamp(-1.0, 1.0).acos();
        let m = -2.0 * q.sqrt();
        let tau = 2.0 * std::f64::consts::PI;
        vec![
            m * (theta / 3.0).cos() - shift,
            m * ((theta + tau) / 3.0).cos() - shift,
            m * ((theta - tau) / 3.0).cos() - shift,
        ]
    } else {
        let big_a = -r.signum() * (r.abs() + (r * r - q3).sqrt()).cbrt();
        let big_b = if big_a == 0.0 { 0.0 } else { q / big_a };
        let x0 = big_a + big_b - shift;
        if (big_a - big_b).abs() <= 1e-12 * big_a.abs().max(1e-300) {
            let x1 = -0.5 * (big_a + big_b) - shift;
            vec![x0, x1, x1]
        } else {
            vec![x0]
        }
    }
}

/// Real roots of `c[0] + c[1] x + c[2] x^2 + c[3] x^3`.
pub fn cubic_roots(c: [f64; 4]) -> Result<Vec<f64>> {
    let scale = max_abs(&c);
    if scale == 0.0 {
        return Err(Error::AllZeroPolynomial);
    }
    if c[3].abs() <= LEADING_TOL * scale {
        let mut r = quadratic_roots(c[2], c[1], c[0]);
        if c[2].abs() <= LEADING_TOL * scale {
            r = if c[1] == 0.0 { vec![] } else { vec![-c[0] / c[1]] };
        }
        return Ok(r);
    }
    let mut roots: Vec<f64> = monic_cubic_roots(c[2] / c[3], c[1] / c[3], c[0] / c[3])
        .into_iter()
        .map(|x| polish(&c, x, 4))
        .collect();
    roots.sort_by(f64::total_cmp);
    Ok(roots)
}

/// Real roots of a quartic, via Ferrari's resolvent cubic.
///
/// Roots are Newton-polished against the input polynomial and returned in
/// ascending order; a double root may appear twice. If any polished root
/// misses a relative residual of `1e-10`, the companion-matrix solver is used
/// instead.
pub fn quartic_roots(c: [f64; 5]) -> Result<Vec<f64>> {
    let scale = max_abs(&c);
    if scale == 0.0 {
        return Err(Error::AllZeroPolynomial);
    }
    if c[4].abs() <= LEADING_TOL * scale {
        return cubic_roots([c[0], c[1], c[2], c[3]]);
    }

    let a = c[3] / c[4];
    let b = c[2] / c[4];
    let cc = c[1] / c[4];
    let d = c[0] / c[4];

    // x = y - a/4 gives y^4 + p y^2 + q y + r
    let a2 = a * a;
    let p = b - 3.0 * a2 / 8.0;
    let q = cc - a * b / 2.0 + a2 * a / 8.0;
    let r = d - a * cc / 4.0 + a2 * b / 16.0 - 3.0 * a2 * a2 / 256.0;
    let shift = -a / 4.0;

    let mut ys = Vec::with_capacity(4);
    let coef_scale = 1.0f64.max(p.abs()).max(q.abs()).max(r.abs());
    if q.abs() <= 1e-14 * coef_scale {
        // biquadratic: z = y^2
        for z in quadratic_roots(1.0, p, r) {
            if z > 0.0 {
                let s = z.sqrt();
                ys.push(-s);
                ys.push(s);
            } else if z > -1e-14 * coef_scale {
                ys.push(0.0);
                ys.push(0.0);
            }
        }
    } else {
        // Resolvent 8 m^3 + 8 p m^2 + (2 p^2 - 8 r) m - q^2 = 0 has a positive root.
        let m = monic_cubic_roots(p, p * p / 4.0 - r, -q * q / 8.0)
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max);
        let res = [-q * q / 8.0, p * p / 4.0 - r, p, 1.0];
        let m = polish(&res, m, 4);
        if m > 0.0 {
            let s = (2.0 * m).sqrt();
            let h = q / (2.0 * s);
            ys.extend(quadratic_roots(1.0, -s, p / 2.0 + m + h));
            ys.extend(quadratic_roots(1.0, s, p / 2.0 + m - h));
        } else {
            // Rounding pushed the resolvent root to zero; companion fallback.
            return super::uni_roots(&super::UniPoly::new(c.to_vec()));
        }
    }

    let mut roots: Vec<f64> = ys.into_iter().map(|y| polish(&c, y + shift, 8)).collect();
    // Widely spread root magnitudes cancel in the shift; the companion
    // matrix handles them.
    if roots.iter().any(|&x| eval(&c, x).abs() > POLISHED_TOL * eval_abs(&c, x)) {
        return super::uni_roots(&super::UniPoly::new(c.to_vec()));
    }
    roots.sort_by(f64::total_cmp);
    Ok(roots)
}


#[cfg(test)]
mod props {
    use super::*;
    use crate::poly::{uni_roots, UniPoly};
    use proptest::prelude::*;

    fn separated_roots() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-10.0f64..10.0, 4).prop_filter("roots too close", |r| {
            let mut s = r.clone();
            s.sort_by(f64::total_cmp);
            s.windows(2).all(|p| p[1] - p[0] > 0.1)
        })
    }

    proptest! {
        #[test]
        fn matches_companion_and_truth(roots in separated_roots(), lead in prop_oneof![-5.0f64..-0.2, 0.2f64..5.0]) {
            let p = UniPoly::from_roots(&roots).scale(lead);
            let c: [f64; 5] = std::array::from_fn(|k| p.coeffs()[k]);
            let closed = quartic_roots(c).unwrap();
            let companion = uni_roots(&p).unwrap();
            let mut want = roots.clone();
            want.sort_by(f64::total_cmp);
            prop_assert_eq!(closed.len(), 4);
            prop_assert_eq!(companion.len(), 4);
            for ((a, b), w) in closed.iter().zip(&companion).zip(&want) {
                prop_assert!((a - w).abs() <= 1e-8 * (1.0 + w.abs()));
                prop_assert!((b - w).abs() <= 1e-8 * (1.0 + w.abs()));
            }
        }

        #[test]
        fn invariant_under_scaling(c in prop::array::uniform5(-3.0f64..3.0), s in prop_oneof![-1e3f64..-1e-3, 1e-3f64..1e3]) {
            prop_assume!(c[4].abs() > 0.1);
            let a = quartic_roots(c).unwrap();
            let b = quartic_roots(c.map(|v| v * s)).unwrap();
            prop_assert_eq!(a.len(), b.len());
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() <= 1e-9 * (1.0 + x.abs()));
            }
        }

        #[test]
        fn returned_roots_are_roots(c in prop::array::uniform5(-3.0f64..3.0)) {
            prop_assume!(c[4].abs() > 0.1);
            let p = UniPoly::new(c.to_vec());
            for x in quartic_roots(c).unwrap() {
                prop_assert!(p.eval(x).abs() <= 1e-7 * p.eval_abs(x).max(1.0));
            }
        }
    }
}
