use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_BIN_WIDTH: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub center: f64,
    pub count: usize,
}

/// Fixed-width histogram of per-pair `lambda` estimates. Bins start at the
/// smallest estimate; only nonempty bins are stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaHistogram {
    pub bin_width: f64,
    pub origin: f64,
    pub bins: Vec<HistogramBin>,
    pub total: usize,
    pub mode_lambda: f64,
}

/// Votes the estimates into bins of width `bin_width` and returns the centre
/// of the fullest bin; ties go to the centre with the smaller magnitude.
pub fn histogram_vote_lambda(lambdas: &[f64], bin_width: f64) -> Result<LambdaHistogram> {
    if lambdas.is_empty() {
        return Err(Error::EmptyInput);
    }
    if !(bin_width > 0.0 && bin_width.is_finite()) {
        return Err(Error::InvalidConfig("bin width must be positive".into()));
    }
    if lambdas.iter().any(|l| !l.is_finite()) {
        return Err(Error::InvalidConfig("lambda estimates must be finite".into()));
    }
    let origin = lambdas.iter().copied().fold(f64::INFINITY, f64::min);
    let mut counts: BTreeMap<u64, usize> = BTreeMap::new();
    for &l in lambdas {
        let idx = ((l - origin) / bin_width).floor() as u64;
        *counts.entry(idx).or_default() += 1;
    }
    let bins: Vec<HistogramBin> = counts
        .into_iter()
        .map(|(idx, count)| HistogramBin {
            center: origin + (idx as f64 + 0.5) * bin_width,
            count,
        })
        .collect();
    let mode = bins
        .iter()
        .reduce(|best, b| {
            if b.count > best.count || (b.count == best.count && b.center.abs() < best.center.abs()) {
                b
            } else {
                best
            }
        })
        .expect("nonempty");
    Ok(LambdaHistogram {
        bin_width,
        origin,
        mode_lambda: mode.center,
        total: lambdas.len(),
        bins,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_cluster() {
        let h = histogram_vote_lambda(&[-0.3; 7], DEFAULT_BIN_WIDTH).unwrap();
        assert!((h.mode_lambda + 0.3).abs() <= DEFAULT_BIN_WIDTH / 2.0 + 1e-12);
        assert_eq!(h.bins.iter().map(|b| b.count).sum::<usize>(), 7);
    }

    #[test]
    fn majority_wins() {
        let mut v: Vec<f64> = (0..90).map(|i| -0.3 + 0.0001 * (i % 10) as f64).collect();
        v.extend((0..10).map(|i| 0.5 + 0.001 * i as f64));
        let h = histogram_vote_lambda(&v, DEFAULT_BIN_WIDTH).unwrap();
        assert!((h.mode_lambda + 0.3).abs() < 0.02);
        assert_eq!(h.total, 100);
    }

    #[test]
    fn tie_prefers_small_magnitude() {
        let h = histogram_vote_lambda(&[-0.5, -0.5, 0.1, 0.1], 0.02).unwrap();
        assert!((h.mode_lambda - 0.1).abs() <= 0.01 + 1e-12);
    }

    #[test]
    fn empty_is_error() {
        assert_eq!(histogram_vote_lambda(&[], 0.02), Err(Error::EmptyInput));
    }
}
