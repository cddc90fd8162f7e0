//! Backward Euler time stepping of diffusion on the punctured square with a Robin
//! exchange condition D∇u·n = φ − a·u on the cell boundary and no flux outside.

use crate::error::{Error, Result};
use crate::fem::{assemble_boundary_load, assemble_boundary_mass_with, mesh_pattern, NodalField, Operators};
use crate::mesh::{build_punctured_square_mesh, BoundaryTag, Mesh};
use crate::model::{is_steady, snapshot_steps, InitialData, RunOptions, Setup, Snapshot};
use crate::solver::SpdSolver;
use crate::sparse::{dot, SparseSymmetricMatrix};

#[derive(Debug, Clone, Default)]
pub struct ExclusionConfig {
    pub setup: Setup,
    pub initial: InitialData,
    pub options: RunOptions,
}

/// Operators of the exclusion model on one punctured mesh.
#[derive(Debug, Clone)]
pub struct ExclusionOperators {
    pub mass: SparseSymmetricMatrix,
    pub stiffness: SparseSymmetricMatrix,
    /// Mass matrix of the cell boundary polyline.
    pub boundary_mass: SparseSymmetricMatrix,
    /// Load of the secretion flux φ on the cell boundary.
    pub flux_load: Vec<f64>,
}

impl ExclusionOperators {
    pub fn assemble(mesh: &Mesh, phi: f64) -> Result<Self> {
        let pattern = mesh_pattern(mesh);
        let Operators { mass, stiffness } = Operators::assemble(mesh)?;
        Ok(Self {
            boundary_mass: assemble_boundary_mass_with(mesh, &pattern, BoundaryTag::Cell)?,
            flux_load: assemble_boundary_load(mesh, BoundaryTag::Cell, phi)?,
            mass,
            stiffness,
        })
    }

    /// M + Δt·(D·K + a·M_Γ).
    pub fn system_matrix(&self, setup: &Setup) -> Result<SparseSymmetricMatrix> {
        let robin = self
            .stiffness
            .combine(setup.diffusion, &self.boundary_mass, setup.cell.uptake)?;
        self.mass.combine(1.0, &robin, setup.dt)
    }

    /// Discrete exchange ∮(φ − a·u) dΓ.
    pub fn boundary_flux(&self, u: &[f64], uptake: f64) -> f64 {
        let ones = vec![1.0; u.len()];
        self.flux_load.iter().sum::<f64>() - uptake * dot(&self.boundary_mass.matvec(&ones), u)
    }
}

/// One backward Euler step: (M + Δt(DK + aM_Γ)) u_{n+1} = M u_n + Δt b_φ.
pub fn exclusion_step(u_n: &NodalField, ops: &ExclusionOperators, setup: &Setup) -> Result<NodalField> {
    let solver = SpdSolver::new(ops.system_matrix(setup)?, setup.rel_tol)?.with_constant_correction();
    step_with(&solver, u_n, ops, setup)
}

fn step_with(solver: &SpdSolver, u_n: &NodalField, ops: &ExclusionOperators, setup: &Setup) -> Result<NodalField> {
    let mut rhs = ops.mass.matvec(u_n);
    for (r, b) in rhs.iter_mut().zip(&ops.flux_load) {
        *r += setup.dt * b;
    }
    let mut next = u_n.values().to_vec();
    solver.solve_into(&rhs, &mut next)?;
    Ok(NodalField::new(next))
}

/// Per-step scalars of an exclusion run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExclusionRecord {
    pub t: f64,
    pub l2: f64,
    pub h1_semi: f64,
    pub mass: f64,
    pub boundary_flux: f64,
}

#[derive(Debug, Clone)]
pub struct ExclusionRun {
    pub records: Vec<ExclusionRecord>,
    pub snapshots: Vec<Snapshot>,
    /// Time at which the steady-state criterion first held.
    pub steady_at: Option<f64>,
}

/// A ready-to-step exclusion model: mesh, operators and the factor-free solver.
#[derive(Debug, Clone)]
pub struct ExclusionModel {
    mesh: Mesh,
    ops: ExclusionOperators,
    solver: SpdSolver,
    setup: Setup,
}

impl ExclusionModel {
    pub fn new(setup: &Setup) -> Result<Self> {
        setup.validate()?;
        let mesh = build_punctured_square_mesh(setup.side, setup.h, &setup.cell)?;
        Self::on_mesh(mesh, setup)
    }

    pub fn on_mesh(mesh: Mesh, setup: &Setup) -> Result<Self> {
        setup.validate()?;
        let ops = ExclusionOperators::assemble(&mesh, setup.cell.phi)?;
        let solver = SpdSolver::new(ops.system_matrix(setup)?, setup.rel_tol)?.with_constant_correction();
        Ok(Self {
            mesh,
            ops,
            solver,
            setup: setup.clone(),
        })
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn operators(&self) -> &ExclusionOperators {
        &self.ops
    }

    pub fn setup(&self) -> &Setup {
        &self.setup
    }

    pub fn initial(&self, data: &InitialData) -> Result<NodalField> {
        data.on(&self.mesh)
    }

    pub fn step(&self, u_n: &NodalField) -> Result<NodalField> {
        step_with(&self.solver, u_n, &self.ops, &self.setup)
    }

    pub fn record(&self, t: f64, u: &NodalField) -> ExclusionRecord {
        let ones = vec![1.0; u.len()];
        ExclusionRecord {
            t,
            l2: self.ops.mass.quadratic_form(u).max(0.0).sqrt(),
            h1_semi: self.ops.stiffness.quadratic_form(u).max(0.0).sqrt(),
            mass: dot(&self.ops.mass.matvec(&ones), u),
            boundary_flux: self.ops.boundary_flux(u, self.setup.cell.uptake),
        }
    }

    pub fn run(&self, initial: &InitialData, options: &RunOptions) -> Result<ExclusionRun> {
        let mut u = self.initial(initial)?;
        let snaps = snapshot_steps(&self.setup, &options.snapshot_times);
        let mut snapshots = Vec::new();
        let mut records = vec![self.record(0.0, &u)];
        if snaps.first() == Some(&0) {
            snapshots.push(Snapshot { t: 0.0, field: u.clone() });
        }
        let mut steady_at = None;
        for step in 1..=self.setup.num_steps() {
            let next = self.step(&u).map_err(|e| Error::Step {
                step,
                source: Box::new(e),
            })?;
            let t = self.setup.time(step);
            let diff: Vec<f64> = next.iter().zip(u.iter()).map(|(a, b)| a - b).collect();
            let change = self.ops.mass.quadratic_form(&diff).max(0.0).sqrt();
            let previous_l2 = records.last().map_or(0.0, |r| r.l2);
            u = next;
            records.push(self.record(t, &u));
            if snaps.binary_search(&step).is_ok() {
                snapshots.push(Snapshot { t, field: u.clone() });
            }
            if steady_at.is_none() && is_steady(change, self.setup.dt, previous_l2) {
                steady_at = Some(t);
                if options.stop_at_steady {
                    break;
                }
            }
        }
        Ok(ExclusionRun {
            records,
            snapshots,
            steady_at,
        })
    }
}

/// Builds the model from `config` and runs it.
pub fn run_exclusion(config: &ExclusionConfig) -> Result<ExclusionRun> {
    ExclusionModel::new(&config.setup)?.run(&config.initial, &config.options)
}
