use thiserror::Error;

/// Errors produced by the solvers, polynomial machinery and benchmark harness.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("translation vector has zero length")]
    ZeroTranslation,
    #[error("inverse focal length is zero")]
    ZeroFocal,
    #[error("epipolar gradient vanishes; point cannot be scored")]
    DegenerateJacobian,
    #[error("polynomial has no nonzero coefficient")]
    AllZeroPolynomial,
    #[error("polynomial has degree zero; no roots to find")]
    ConstantPolynomial,
    #[error("resultant vanishes identically (inputs share a common factor)")]
    ZeroResultant,
    #[error("polynomial has no positive degree in the eliminated variable")]
    NotInEliminatedVariable,
    #[error("degenerate minimal sample: {0}")]
    DegenerateSample(&'static str),
    #[error("wrong number of correspondences: expected {expected}, got {got}")]
    WrongSampleSize { expected: usize, got: usize },
    #[error("need at least {needed} gyro samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("gyro stream is empty")]
    EmptyStream,
    #[error("interval [{t0}, {t1}] is not covered by the gyro stream")]
    OutOfRange { t0: f64, t1: f64 },
    #[error("need at least {needed} correspondences, got {got}")]
    TooFewCorrespondences { needed: usize, got: usize },
    #[error("no model found: every RANSAC trial was degenerate or rejected")]
    NoModelFound,
    #[error("input is empty")]
    EmptyInput,
    #[error("scene generation failed after {0} attempts")]
    GenerationFailed(usize),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
