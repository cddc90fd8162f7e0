//! Configuration shared by both cell models.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fem::NodalField;
use crate::geometry::Point2;
use crate::mesh::{CellSpec, Mesh};
use crate::solver::DEFAULT_REL_TOL;

/// Reference parameter set: unit diffusion, secretion and uptake, a cell of radius
/// 0.25 centered in a 10 × 10 box.
pub mod defaults {
    pub const DIFFUSION: f64 = 1.0;
    pub const PHI: f64 = 1.0;
    pub const UPTAKE: f64 = 1.0;
    pub const CENTER: (f64, f64) = (5.0, 5.0);
    pub const RADIUS: f64 = 0.25;
    pub const SIDE: f64 = 10.0;
    pub const MESH_SIZE: f64 = 0.2495;
    pub const DT: f64 = 0.04;
    pub const EPSILON: f64 = 0.02;
    pub const T_END: f64 = 40.0;
    pub const QUADRATURE_POINTS: usize = 64;
}

/// Geometry, physics and time grid common to both models.
#[derive(Debug, Clone, PartialEq)]
pub struct Setup {
    pub side: f64,
    /// Target mean edge length.
    pub h: f64,
    pub cell: CellSpec,
    pub diffusion: f64,
    pub dt: f64,
    pub t_end: f64,
    pub rel_tol: f64,
}

impl Default for Setup {
    fn default() -> Self {
        use defaults::*;
        Self {
            side: SIDE,
            h: MESH_SIZE,
            cell: CellSpec::new(Point2::new(CENTER.0, CENTER.1), RADIUS, PHI, UPTAKE),
            diffusion: DIFFUSION,
            dt: DT,
            t_end: T_END,
            rel_tol: DEFAULT_REL_TOL,
        }
    }
}

impl Setup {
    pub fn validate(&self) -> Result<()> {
        if !(self.diffusion > 0.0 && self.diffusion.is_finite()) {
            return Err(Error::param(format!("diffusion must be positive, got {}", self.diffusion)));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::param(format!("time step must be positive, got {}", self.dt)));
        }
        if !(self.t_end >= self.dt && self.t_end.is_finite()) {
            return Err(Error::param(format!("final time {} is below the time step {}", self.t_end, self.dt)));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) {
            return Err(Error::param(format!("solver tolerance must lie in (0, 1), got {}", self.rel_tol)));
        }
        self.cell.validate(self.side)
    }

    /// Number of backward Euler steps to reach `t_end`.
    pub fn num_steps(&self) -> usize {
        ((self.t_end / self.dt).round() as usize).max(1)
    }

    pub fn time(&self, step: usize) -> f64 {
        step as f64 * self.dt
    }
}

/// Initial concentration.
#[derive(Clone)]
pub enum InitialData {
    Constant(f64),
    Nodal(NodalField),
    Function(Arc<dyn Fn(Point2) -> f64 + Send + Sync>),
}

impl Default for InitialData {
    fn default() -> Self {
        InitialData::Constant(0.0)
    }
}

impl fmt::Debug for InitialData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialData::Constant(c) => write!(f, "Constant({c})"),
            InitialData::Nodal(u) => write!(f, "Nodal(len = {})", u.len()),
            InitialData::Function(_) => write!(f, "Function(..)"),
        }
    }
}

impl InitialData {
    pub fn on(&self, mesh: &Mesh) -> Result<NodalField> {
        let u = match self {
            InitialData::Constant(c) => NodalField::constant(mesh.num_vertices(), *c),
            InitialData::Nodal(u) => {
                u.check_len(mesh)?;
                u.clone()
            }
            InitialData::Function(f) => NodalField::interpolate(mesh, |p| f(p)),
        };
        if !u.is_finite() {
            return Err(Error::param("initial data must be finite"));
        }
        Ok(u)
    }
}

/// Output controls for a single run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOptions {
    /// Stop once ‖u_{n+1} − u_n‖/Δt < 1e−8·max(1, ‖u_n‖).
    pub stop_at_steady: bool,
    /// Times at which nodal snapshots are kept (rounded to the time grid).
    pub snapshot_times: Vec<f64>,
}

pub(crate) const STEADY_TOL: f64 = 1e-8;

pub(crate) fn is_steady(change_l2: f64, dt: f64, current_l2: f64) -> bool {
    change_l2 / dt < STEADY_TOL * current_l2.max(1.0)
}

/// Step indices at which snapshots are taken.
pub(crate) fn snapshot_steps(setup: &Setup, times: &[f64]) -> Vec<usize> {
    let n = setup.num_steps();
    let mut steps: Vec<usize> = times
        .iter()
        .filter(|t| t.is_finite() && **t >= 0.0)
        .map(|t| ((t / setup.dt).round() as usize).min(n))
        .collect();
    steps.sort_unstable();
    steps.dedup();
    steps
}

/// A nodal field kept at a given time.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub t: f64,
    pub field: NodalField,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        let s = Setup::default();
        s.validate().unwrap();
        assert_eq!(s.num_steps(), 1000);
        assert!(Setup { t_end: 0.01, ..s.clone() }.validate().is_err());
        assert!(Setup { diffusion: 0.0, ..s.clone() }.validate().is_err());
        assert!(Setup { dt: -1.0, ..s }.validate().is_err());
    }

    #[test]
    fn snapshots_round_to_grid() {
        let s = Setup {
            dt: 0.5,
            t_end: 2.0,
            ..Setup::default()
        };
        assert_eq!(snapshot_steps(&s, &[0.0, 0.74, 0.76, 10.0, 1.0]), vec![0, 1, 2, 4]);
    }
}
