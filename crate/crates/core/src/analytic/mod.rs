//! Closed-form and series references for a point source: the exponential
//! integral, the free-space solution, the Neumann heat kernel and series solution
//! on (0, π)², and the singularity / summability diagnostics.

mod diagnostics;
mod expint;
mod series;

pub use diagnostics::{
    annular_integral, gradient_partial, linear_fit, singularity_profile, summability_diagnostics, zeta4_partial,
    LinearFit, ProfilePoint, SingularityProfile, Summability, ANGULAR_NODES,
};
pub use expint::{e1_by_quadrature, exp_integral_e1, freespace_gradient, freespace_solution, EULER_GAMMA};
pub use series::{neumann_heat_kernel, series_point_solution, SeriesParams};
