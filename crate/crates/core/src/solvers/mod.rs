//! Minimal relative-pose solvers for a known relative rotation.
//!
//! With the rotation fixed, every correspondence contributes one equation
//! `((R r_i) x r'_i) . t = 0` that is linear in the translation, where
//! `r_i`, `r'_i` are the back-projected rays. Stacking these rows gives a
//! matrix `M` whose entries are polynomials in the unknown intrinsics; a
//! nontrivial null space requires the vanishing of its maximal minors.

mod four_point;
mod three_point;
mod two_point;

pub use four_point::{build_m_4pt, solve_4pt_focal_distortion, solve_4pt_with, subdeterminants, FourPointOptions};
pub use three_point::{build_m_3pt, det_m_3pt, solve_3pt_focal, PolyMatrix3};
pub use two_point::solve_2pt_calibrated;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{epipolar_residual, Correspondence, Normalization, PoseSolution, RotationMat};

/// Input to a minimal solver.
#[derive(Debug, Clone, PartialEq)]
pub struct MinimalProblem {
    pub corrs: Vec<Correspondence>,
    pub rotation: RotationMat,
    pub norm: Normalization,
}

impl MinimalProblem {
    pub fn new(corrs: Vec<Correspondence>, rotation: RotationMat, norm: Normalization) -> Self {
        Self { corrs, rotation, norm }
    }

    pub(crate) fn expect_len(&self, n: usize) -> Result<()> {
        if self.corrs.len() != n {
            return Err(Error::WrongSampleSize {
                expected: n,
                got: self.corrs.len(),
            });
        }
        Ok(())
    }

    /// Largest absolute epipolar residual over the sample.
    pub fn max_residual(&self, sol: &PoseSolution) -> f64 {
        self.corrs
            .iter()
            .map(|c| epipolar_residual(sol, c, &self.norm).abs())
            .fold(0.0, f64::max)
    }
}

/// Which minimal solver to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SolverKind {
    #[serde(rename = "2pt")]
    TwoPoint,
    #[serde(rename = "3pt")]
    ThreePoint,
    #[serde(rename = "4pt")]
    FourPoint,
}

impl SolverKind {
    pub fn sample_size(self) -> usize {
        match self {
            SolverKind::TwoPoint => 2,
            SolverKind::ThreePoint => 3,
            SolverKind::FourPoint => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SolverKind::TwoPoint => "2pt",
            SolverKind::ThreePoint => "3pt",
            SolverKind::FourPoint => "4pt",
        }
    }
}

impl std::str::FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "2pt" => Ok(SolverKind::TwoPoint),
            "3pt" => Ok(SolverKind::ThreePoint),
            "4pt" => Ok(SolverKind::FourPoint),
            other => Err(Error::InvalidConfig(format!("unknown solver `{other}`"))),
        }
    }
}

impl std::fmt::Display for SolverKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Per-solution diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Largest absolute epipolar residual over the minimal sample.
    pub max_residual: f64,
    /// `|M t| / |M|_F` at the root.
    pub null_residual: f64,
}

/// Solver result: candidate models ordered by minimal-sample residual.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverOutput {
    pub solutions: Vec<PoseSolution>,
    pub diagnostics: Vec<Diagnostics>,
    /// Real algebraic roots found before the positive-focal filter.
    pub real_roots: usize,
}

impl SolverOutput {
    pub(crate) fn from_unsorted(mut pairs: Vec<(PoseSolution, Diagnostics)>, real_roots: usize) -> Self {
        pairs.sort_by(|a, b| a.1.max_residual.total_cmp(&b.1.max_residual));
        let (solutions, diagnostics) = pairs.into_iter().unzip();
        Self {
            solutions,
            diagnostics,
            real_roots,
        }
    }

    pub fn len(&self) -> usize {
        self.solutions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.solutions.is_empty()
    }
}

/// Runs the solver for `kind`. The 2-point solver needs known intrinsics
/// `(f_px, lambda_norm)`.
pub fn solve(kind: SolverKind, problem: &MinimalProblem, known: Option<(f64, f64)>) -> Result<SolverOutput> {
    match kind {
        SolverKind::TwoPoint => {
            let (f, lambda) = known.ok_or_else(|| {
                Error::InvalidConfig("the 2-point solver needs a known focal length".into())
            })?;
            solve_2pt_calibrated(problem, f, lambda)
        }
        SolverKind::ThreePoint => solve_3pt_focal(problem),
        SolverKind::FourPoint => solve_4pt_focal_distortion(problem),
    }
}
