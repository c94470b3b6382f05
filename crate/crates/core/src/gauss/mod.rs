//! Self-contained Gaussian numerics: special functions, quadrature, bracketed
//! root finding, and a damped Newton solver for small nonlinear systems.
//!
//! Everything here is a pure function of its inputs.

mod newton;
mod quad;
mod root;
mod special;

pub use newton::{solve_system, solve_system_with_fallback, NewtonReport};
pub use quad::{
    adaptive_simpson, gauss_expect, gauss_expect_piecewise, gauss_hermite, gauss_legendre,
    integrate_segmented, QuadRule, QuadratureSpec,
};
pub use root::{find_root, RootBracket};
pub use special::{
    erf, erfc, gaussian_mass, gaussian_partial_mean, mills_ratio, norm_cdf, norm_pdf, std_cdf,
    std_inv_cdf, std_pdf, SQRT_2PI,
};
