//! Cross-model comparison on the shared domain Ω̃ = Ω ∖ cell.
//!
//! Quadrature lives on the exclusion model's mesh; the point-model field is
//! interpolated from the full-square mesh at each quadrature point.

use crate::error::{Error, Result};
use crate::exclusion::ExclusionModel;
use crate::fem::NodalField;
use crate::geometry::{p1_gradients, Point2};
use crate::mesh::Mesh;
use crate::model::{InitialData, RunOptions, Setup};
use crate::point::{Coupling, PointConfig, PointModel};
use crate::quadrature::{map_point, triangle7};

/// Width of the band around the circle (relative to R) in which quadrature points
/// of Ω̃ may fall inside the true disk because the cell boundary is polygonal.
const MISMATCH_BAND: f64 = 0.05;

#[derive(Debug, Clone, Copy)]
struct QuadPoint {
    weight: f64,
    tilde_cell: usize,
    tilde_bary: [f64; 3],
    full_cell: usize,
    full_bary: [f64; 3],
}

/// Degree-5 quadrature of Ω̃ with the matching locations on the full-square mesh.
#[derive(Debug, Clone)]
pub struct SharedQuadrature {
    points: Vec<QuadPoint>,
    tilde_cells: Vec<[usize; 3]>,
    full_cells: Vec<[usize; 3]>,
    tilde_grads: Vec<[Point2; 3]>,
    full_grads: Vec<[Point2; 3]>,
    tilde_vertices: usize,
    full_vertices: usize,
    /// Quadrature points dropped because they fall inside the cell disk.
    pub discarded: usize,
    pub total: usize,
}

impl SharedQuadrature {
    pub fn new(tilde: &Mesh, full: &Mesh) -> Result<Self> {
        let (center, radius) = tilde
            .hole()
            .ok_or_else(|| Error::Geometry("comparison mesh has no cell boundary".into()))?;
        let rule = triangle7();
        let mut points = Vec::with_capacity(tilde.num_cells() * rule.len());
        let mut discarded = 0;
        let mut hint = None;
        for k in 0..tilde.num_cells() {
            let t = tilde.cell_points(k);
            let area = tilde.cell_area(k);
            for (l, w) in rule {
                let q = map_point(&t, &l);
                if q.dist(center) < radius {
                    if q.dist(center) < (1.0 - MISMATCH_BAND) * radius {
                        return Err(Error::Geometry(format!(
                            "quadrature point ({}, {}) lies deep inside the cell disk",
                            q.x, q.y
                        )));
                    }
                    discarded += 1;
                    continue;
                }
                let loc = full
                    .locate_from(q, hint)
                    .map_err(|_| Error::Geometry(format!("point ({}, {}) of Ω̃ is not covered by the full mesh", q.x, q.y)))?;
                hint = Some(loc.cell);
                points.push(QuadPoint {
                    weight: w * area,
                    tilde_cell: k,
                    tilde_bary: l,
                    full_cell: loc.cell,
                    full_bary: loc.bary,
                });
            }
        }
        if discarded > 0 {
            log::debug!("discarded {discarded} quadrature points inside the cell disk");
        }
        let grads = |m: &Mesh| -> Vec<[Point2; 3]> {
            (0..m.num_cells())
                .map(|k| {
                    let [a, b, c] = m.cell_points(k);
                    p1_gradients(a, b, c).0
                })
                .collect()
        };
        Ok(Self {
            total: points.len() + discarded,
            points,
            tilde_cells: tilde.cells().to_vec(),
            full_cells: full.cells().to_vec(),
            tilde_grads: grads(tilde),
            full_grads: grads(full),
            tilde_vertices: tilde.num_vertices(),
            full_vertices: full.num_vertices(),
            discarded,
        })
    }

    pub fn discard_fraction(&self) -> f64 {
        self.discarded as f64 / self.total.max(1) as f64
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn check(&self, u_point: &[f64], u_excl: &[f64]) -> Result<()> {
        if u_point.len() != self.full_vertices {
            return Err(Error::Dimension {
                expected: self.full_vertices,
                got: u_point.len(),
            });
        }
        if u_excl.len() != self.tilde_vertices {
            return Err(Error::Dimension {
                expected: self.tilde_vertices,
                got: u_excl.len(),
            });
        }
        Ok(())
    }

    /// Values of the full-square field at every retained quadrature point of Ω̃.
    pub fn restrict(&self, u_point: &[f64]) -> Result<Vec<f64>> {
        if u_point.len() != self.full_vertices {
            return Err(Error::Dimension {
                expected: self.full_vertices,
                got: u_point.len(),
            });
        }
        Ok(self
            .points
            .iter()
            .map(|q| interp(&self.full_cells[q.full_cell], &q.full_bary, u_point))
            .collect())
    }

    /// Norms of both fields and of their difference on Ω̃.
    pub fn difference(&self, u_point: &[f64], u_excl: &[f64]) -> Result<Difference> {
        self.check(u_point, u_excl)?;
        let (mut diff2, mut grad2, mut s2, mut p2) = (0.0, 0.0, 0.0, 0.0);
        for q in &self.points {
            let tc = &self.tilde_cells[q.tilde_cell];
            let fc = &self.full_cells[q.full_cell];
            let us = interp(tc, &q.tilde_bary, u_excl);
            let up = interp(fc, &q.full_bary, u_point);
            let gs = grad(tc, &self.tilde_grads[q.tilde_cell], u_excl);
            let gp = grad(fc, &self.full_grads[q.full_cell], u_point);
            let dg = gp - gs;
            diff2 += q.weight * (up - us) * (up - us);
            grad2 += q.weight * dg.dot(dg);
            s2 += q.weight * us * us;
            p2 += q.weight * up * up;
        }
        let l2_excl = s2.sqrt();
        let abs_l2 = diff2.sqrt();
        Ok(Difference {
            e_l2: (l2_excl > 0.0).then(|| abs_l2 / l2_excl),
            abs_l2,
            abs_h1_semi: grad2.sqrt(),
            l2_excl,
            l2_point: p2.sqrt(),
        })
    }
}

fn interp(tri: &[usize; 3], bary: &[f64; 3], u: &[f64]) -> f64 {
    bary[0] * u[tri[0]] + bary[1] * u[tri[1]] + bary[2] * u[tri[2]]
}

fn grad(tri: &[usize; 3], g: &[Point2; 3], u: &[f64]) -> Point2 {
    u[tri[0]] * g[0] + u[tri[1]] * g[1] + u[tri[2]] * g[2]
}

/// Difference measures between the two models at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Difference {
    /// ‖u_P − u_S‖/‖u_S‖ on Ω̃; `None` while ‖u_S‖ = 0.
    pub e_l2: Option<f64>,
    pub abs_l2: f64,
    pub abs_h1_semi: f64,
    pub l2_excl: f64,
    pub l2_point: f64,
}

/// Values of the point-model field at the quadrature points of Ω̃.
pub fn restrict_to_tilde(u_point: &NodalField, quad: &SharedQuadrature) -> Result<Vec<f64>> {
    quad.restrict(u_point)
}

/// Relative L² difference ‖u_P − u_S‖_{L²(Ω̃)} / ‖u_S‖_{L²(Ω̃)}; `None` when the
/// denominator vanishes.
pub fn relative_l2_difference(u_point: &[f64], u_excl: &[f64], quad: &SharedQuadrature) -> Result<Option<f64>> {
    Ok(quad.difference(u_point, u_excl)?.e_l2)
}

/// One row of a comparison series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonRow {
    pub t: f64,
    pub e_l2: Option<f64>,
    pub abs_l2: f64,
    pub abs_h1_semi: f64,
    pub l2_excl: f64,
    pub l2_point: f64,
    pub psi: f64,
    /// Both models have met the steady-state criterion.
    pub steady: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonSeries {
    pub rows: Vec<ComparisonRow>,
    /// Final relative difference.
    pub plateau_e_l2: Option<f64>,
    /// First time both models were steady.
    pub time_to_plateau: Option<f64>,
}

impl ComparisonSeries {
    /// First time at which e_l2 drops below `threshold` and stays below it.
    pub fn time_to_threshold(&self, threshold: f64) -> Option<f64> {
        let mut candidate = None;
        for row in &self.rows {
            match row.e_l2 {
                Some(e) if e < threshold => {
                    candidate.get_or_insert(row.t);
                }
                _ => candidate = None,
            }
        }
        candidate
    }

    pub fn at_time(&self, t: f64) -> Option<&ComparisonRow> {
        self.rows.iter().min_by(|a, b| (a.t - t).abs().total_cmp(&(b.t - t).abs()))
    }
}

/// Parameters of a comparison: the point model's extras on top of the shared setup.
#[derive(Debug, Clone, Default)]
pub struct ComparisonConfig {
    pub point: PointConfig,
    /// Initial data for the exclusion model; the point model uses `point.initial`.
    pub initial_excl: InitialData,
}

impl ComparisonConfig {
    pub fn setup(&self) -> &Setup {
        &self.point.setup
    }
}

/// Both models and the shared quadrature, stepped in lock-step.
pub struct Comparison {
    pub exclusion: ExclusionModel,
    pub point: PointModel,
    pub quadrature: SharedQuadrature,
}

impl Comparison {
    pub fn new(config: &ComparisonConfig) -> Result<Self> {
        config.point.validate()?;
        let exclusion = ExclusionModel::new(config.setup())?;
        let point = PointModel::new(&config.point)?;
        let quadrature = SharedQuadrature::new(exclusion.mesh(), point.mesh())?;
        Ok(Self {
            exclusion,
            point,
            quadrature,
        })
    }

    /// Runs both models on the identical time grid. The two steps of each index run
    /// on separate threads and are reduced once both are done.
    pub fn run(&self, config: &ComparisonConfig) -> Result<ComparisonSeries> {
        let setup = self.exclusion.setup();
        let mut us = self.exclusion.initial(&config.initial_excl)?;
        let mut up = self.point.initial(&config.point.initial)?;
        let mut rows = vec![self.row(0.0, &up, &us, false)?];
        let (mut steady_s, mut steady_p) = (false, false);
        let mut time_to_plateau = None;
        for step in 1..=setup.num_steps() {
            let (next_s, next_p) = std::thread::scope(|scope| {
                let handle = scope.spawn(|| self.exclusion.step(&us));
                let p = self.point.step(&up);
                (handle.join().expect("exclusion step panicked"), p)
            });
            let wrap = |e| Error::Step {
                step,
                source: Box::new(e),
            };
            let (next_s, next_p) = (next_s.map_err(wrap)?, next_p.map_err(wrap)?);
            steady_s |= steady(&self.exclusion.operators().mass, &next_s, &us, setup.dt);
            steady_p |= steady(&self.point.operators().mass, &next_p, &up, setup.dt);
            us = next_s;
            up = next_p;
            let t = setup.time(step);
            let both = steady_s && steady_p;
            if both && time_to_plateau.is_none() {
                time_to_plateau = Some(t);
            }
            rows.push(self.row(t, &up, &us, both).map_err(wrap)?);
        }
        Ok(ComparisonSeries {
            plateau_e_l2: rows.last().and_then(|r| r.e_l2),
            time_to_plateau,
            rows,
        })
    }

    fn row(&self, t: f64, up: &NodalField, us: &NodalField, steady: bool) -> Result<ComparisonRow> {
        let d = self.quadrature.difference(up, us)?;
        Ok(ComparisonRow {
            t,
            e_l2: d.e_l2,
            abs_l2: d.abs_l2,
            abs_h1_semi: d.abs_h1_semi,
            l2_excl: d.l2_excl,
            l2_point: d.l2_point,
            psi: self.point.psi(up)?,
            steady,
        })
    }
}

fn steady(mass: &crate::sparse::SparseSymmetricMatrix, next: &[f64], prev: &[f64], dt: f64) -> bool {
    let diff: Vec<f64> = next.iter().zip(prev).map(|(a, b)| a - b).collect();
    let change = mass.quadratic_form(&diff).max(0.0).sqrt();
    crate::model::is_steady(change, dt, mass.quadratic_form(prev).max(0.0).sqrt())
}

/// Runs both models with shared parameters and reduces them step by step.
pub fn run_comparison(config: &ComparisonConfig) -> Result<ComparisonSeries> {
    Comparison::new(config)?.run(config)
}

/// Convenience: comparison with both models started from the same constant.
pub fn comparison_config(setup: Setup, coupling: Coupling, initial: f64) -> ComparisonConfig {
    ComparisonConfig {
        point: PointConfig {
            setup,
            coupling,
            initial: InitialData::Constant(initial),
            options: RunOptions::default(),
            ..PointConfig::default()
        },
        initial_excl: InitialData::Constant(initial),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_punctured_square_mesh, build_square_mesh, CellSpec};

    fn meshes() -> (Mesh, Mesh) {
        let cell = CellSpec::new(Point2::new(5.0, 5.0), 0.25, 1.0, 1.0);
        (
            build_punctured_square_mesh(10.0, 0.2495, &cell).unwrap(),
            build_square_mesh(10.0, 0.2495).unwrap(),
        )
    }

    #[test]
    fn restriction_of_constants_and_affines() {
        let (tilde, full) = meshes();
        let quad = SharedQuadrature::new(&tilde, &full).unwrap();
        let c = NodalField::constant(full.num_vertices(), 2.0);
        assert!(quad.restrict(&c).unwrap().iter().all(|v| (v - 2.0).abs() < 1e-13));
        let f = |p: Point2| 0.5 * p.x - 1.5 * p.y + 3.0;
        let u = NodalField::interpolate(&full, f);
        let values = restrict_to_tilde(&u, &quad).unwrap();
        for (q, v) in quad.points.iter().zip(&values) {
            let t = tilde.cell_points(q.tilde_cell);
            let p = map_point(&t, &q.tilde_bary);
            assert!((v - f(p)).abs() < 1e-12);
        }
        assert!(quad.discard_fraction() < 0.01, "{}", quad.discard_fraction());
    }

    #[test]
    fn relative_difference_basics() {
        let (tilde, full) = meshes();
        let quad = SharedQuadrature::new(&tilde, &full).unwrap();
        let f = |p: Point2| 1.0 + 0.1 * p.x * p.y;
        let us = NodalField::interpolate(&tilde, f);
        let up = NodalField::interpolate(&full, f);
        // same affine-free smooth field interpolated on two meshes: small but nonzero
        let e = relative_l2_difference(&up, &us, &quad).unwrap().unwrap();
        assert!(e < 1e-2, "{e}");
        let lin = |p: Point2| 1.0 + 0.2 * p.x - 0.1 * p.y;
        let us = NodalField::interpolate(&tilde, lin);
        let up = NodalField::interpolate(&full, lin);
        assert!(relative_l2_difference(&up, &us, &quad).unwrap().unwrap() < 1e-13);
        let up2 = NodalField::new(up.iter().map(|v| 2.0 * v).collect());
        let e2 = relative_l2_difference(&up2, &us, &quad).unwrap().unwrap();
        assert!((e2 - 1.0).abs() < 1e-12);
        let zero = NodalField::zeros(tilde.num_vertices());
        assert_eq!(relative_l2_difference(&up, &zero, &quad).unwrap(), None);
        assert!(relative_l2_difference(&zero, &up, &quad).is_err());
    }

    #[test]
    fn threshold_time_requires_staying_below() {
        let row = |t, e| ComparisonRow {
            t,
            e_l2: e,
            abs_l2: 0.0,
            abs_h1_semi: 0.0,
            l2_excl: 0.0,
            l2_point: 0.0,
            psi: 0.0,
            steady: false,
        };
        let series = ComparisonSeries {
            rows: vec![row(0.0, None), row(1.0, Some(0.01)), row(2.0, Some(0.2)), row(3.0, Some(0.04)), row(4.0, Some(0.03))],
            plateau_e_l2: Some(0.03),
            time_to_plateau: None,
        };
        assert_eq!(series.time_to_threshold(0.05), Some(3.0));
        assert_eq!(series.time_to_threshold(0.001), None);
    }
}
