//! Robust estimation: RANSAC over the minimal solvers and histogram voting
//! for the distortion coefficient across image pairs.

mod histogram;
mod ransac;

pub use histogram::{histogram_vote_lambda, HistogramBin, LambdaHistogram, DEFAULT_BIN_WIDTH};
pub use ransac::{draw_samples, ransac_estimate, ransac_with_samples, RansacConfig, RansacResult, Scoring};
