//! Finite-element simulation of a compound-exchanging cell, modelled either as an
//! excluded disk with a Robin flux condition or as a regularized point source
//! whose amplitude is the flux across a virtual cell boundary.

// parameter checks are written as `!(x > 0.0)` on purpose so that NaN is rejected
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::too_many_arguments)]

pub mod analytic;
pub mod cli;
pub mod compare;
pub mod error;
pub mod exclusion;
pub mod fem;
pub mod geometry;
pub mod mesh;
pub mod model;
pub mod point;
pub mod quadrature;
pub mod solver;
pub mod sparse;

pub use error::{Error, Result};
pub use geometry::Point2;
