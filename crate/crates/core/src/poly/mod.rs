//! Small-degree polynomial machinery: closed-form quartics, companion-matrix
//! roots, dense bivariate polynomials and resultant elimination.

mod bivariate;
mod quartic;
mod resultant;
mod univariate;

pub use bivariate::{BiPoly, Var};
pub use quartic::{cubic_roots, quadratic_roots, quartic_roots};
pub use resultant::{
    bivariate_roots, relative_residual, sylvester_resultant, sylvester_resultant_on, RootOptions,
    SAMPLE_RADIUS,
};
pub use univariate::{uni_roots, UniPoly, TRIM_TOL};
