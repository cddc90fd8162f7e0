use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use crate::analytic::{
    e1_by_quadrature, exp_integral_e1, freespace_solution, series_point_solution, singularity_profile,
    summability_diagnostics, SeriesParams,
};
use crate::compare::{run_comparison, ComparisonSeries};
use crate::error::{Error, Result};
use crate::exclusion::ExclusionModel;
use crate::geometry::Point2;
use crate::mesh::{build_punctured_square_mesh, build_square_mesh, vtk, Mesh};
use crate::model::Snapshot;
use crate::point::PointModel;

use super::config::RunConfig;
use super::csv::Table;

/// Threshold on the relative difference used by the fig3 summary.
pub const THRESHOLD: f64 = 0.05;

pub const FIG3_DIFFUSION: [f64; 3] = [0.1, 1.0, 10.0];
pub const FIG3_UPTAKE: [f64; 2] = [0.0, 1.0];

fn out_dir(config: &RunConfig) -> Result<&Path> {
    std::fs::create_dir_all(&config.out)
        .map_err(|e| Error::Io(format!("cannot create {}: {e}", config.out.display())))?;
    Ok(&config.out)
}

fn comment(mode: &str, config: &RunConfig) -> String {
    format!("dirac-cell {mode} {}", config.describe())
}

/// Files written by a command, for reporting.
pub type Written = Vec<PathBuf>;

fn write_table(dir: &Path, name: &str, table: &Table, written: &mut Written) -> Result<()> {
    let path = dir.join(name);
    table.write(&path)?;
    written.push(path);
    Ok(())
}

fn write_snapshots(mesh: &Mesh, dir: &Path, stem: &str, snaps: &[Snapshot], written: &mut Written) -> Result<()> {
    for s in snaps {
        let path = dir.join(format!("{stem}_t{:.4}.vtk", s.t));
        vtk::write_field(mesh, &s.field, &path)?;
        written.push(path);
    }
    Ok(())
}

pub fn cmd_mesh(config: &RunConfig) -> Result<Written> {
    let dir = out_dir(config)?;
    let tilde = build_punctured_square_mesh(config.side, config.h, &config.cell())?;
    let full = build_square_mesh(config.side, config.h)?;
    let mut written = Vec::new();
    let mut table = Table::new(
        &comment("mesh", config),
        &["mesh", "num_vertices", "num_cells", "min_angle", "max_aspect", "avg_edge_length", "area"],
    );
    for (name, mesh) in [("tilde", &tilde), ("full", &full)] {
        let stem = format!("mesh_{name}");
        vtk::write_mesh(mesh, dir, &stem)?;
        written.push(dir.join(format!("{stem}.vtk")));
        written.push(dir.join(format!("{stem}_edges.vtk")));
        let q = mesh.quality()?;
        log::info!(
            "{name} mesh: {} vertices, {} cells, min angle {:.2}°",
            q.num_vertices,
            q.num_cells,
            q.min_angle
        );
        table.row(vec![
            name.into(),
            q.num_vertices.into(),
            q.num_cells.into(),
            q.min_angle.into(),
            q.max_aspect.into(),
            q.avg_edge_length.into(),
            mesh.area().into(),
        ]);
    }
    write_table(dir, "mesh_quality.csv", &table, &mut written)?;
    Ok(written)
}

pub fn cmd_run_exclusion(config: &RunConfig) -> Result<Written> {
    let dir = out_dir(config)?;
    let model = ExclusionModel::new(&config.setup())?;
    let run = model.run(&config.initial(), &config.options())?;
    let mut table = Table::new(&comment("run-exclusion", config), &["t", "l2", "h1_semi", "mass", "boundary_flux"]);
    for r in &run.records {
        table.row(vec![r.t.into(), r.l2.into(), r.h1_semi.into(), r.mass.into(), r.boundary_flux.into()]);
    }
    let mut written = Vec::new();
    write_table(dir, "exclusion.csv", &table, &mut written)?;
    write_snapshots(model.mesh(), dir, "exclusion", &run.snapshots, &mut written)?;
    Ok(written)
}

pub fn cmd_run_point(config: &RunConfig) -> Result<Written> {
    let dir = out_dir(config)?;
    let pc = config.point_config();
    let model = PointModel::new(&pc)?;
    let run = model.run(&pc.initial, &pc.options)?;
    let mut table = Table::new(&comment("run-point", config), &["t", "l2_full", "l2_tilde", "mass", "psi"]);
    for r in &run.records {
        table.row(vec![r.t.into(), r.l2_full.into(), r.l2_tilde.into(), r.mass.into(), r.psi.into()]);
    }
    let mut written = Vec::new();
    write_table(dir, "point.csv", &table, &mut written)?;
    write_snapshots(model.mesh(), dir, "point", &run.snapshots, &mut written)?;
    Ok(written)
}

fn comparison_table(config: &RunConfig, mode: &str, series: &ComparisonSeries) -> Table {
    let mut table = Table::new(
        &comment(mode, config),
        &["t", "e_l2", "abs_l2", "abs_h1semi", "l2_uS", "l2_uP", "psi", "steady"],
    );
    for r in &series.rows {
        table.row(vec![
            r.t.into(),
            r.e_l2.into(),
            r.abs_l2.into(),
            r.abs_h1_semi.into(),
            r.l2_excl.into(),
            r.l2_point.into(),
            r.psi.into(),
            r.steady.into(),
        ]);
    }
    table
}

pub fn cmd_compare(config: &RunConfig) -> Result<Written> {
    let dir = out_dir(config)?;
    let series = run_comparison(&config.comparison_config())?;
    if let Some(e) = series.plateau_e_l2 {
        log::info!("final relative difference {e:.4e}");
    }
    let mut written = Vec::new();
    write_table(dir, "compare.csv", &comparison_table(config, "compare", &series), &mut written)?;
    Ok(written)
}

pub fn cmd_fig2(config: &RunConfig) -> Result<Written> {
    if config.uptake == 0.0 {
        return Err(Error::config(
            "a",
            "without uptake there is no steady state to plateau at; use run-exclusion or run-point to follow the growth",
        ));
    }
    let dir = out_dir(config)?;
    let pc = config.point_config();
    let ex = ExclusionModel::new(&pc.setup)?;
    let pt = PointModel::new(&pc)?;
    let options = config.options();
    let (ex_run, pt_run) = std::thread::scope(|scope| {
        let h = scope.spawn(|| ex.run(&pc.initial, &options));
        let p = pt.run(&pc.initial, &options);
        (h.join().expect("exclusion run panicked"), p)
    });
    let (ex_run, pt_run) = (ex_run?, pt_run?);
    let header = ["t", "l2_tilde", "mass", "flux_or_psi"];
    let mut ex_table = Table::new(&comment("fig2 exclusion", config), &header);
    for r in &ex_run.records {
        ex_table.row(vec![r.t.into(), r.l2.into(), r.mass.into(), r.boundary_flux.into()]);
    }
    let mut pt_table = Table::new(&comment("fig2 point", config), &header);
    for r in &pt_run.records {
        pt_table.row(vec![r.t.into(), r.l2_tilde.into(), r.mass.into(), r.psi.into()]);
    }
    let target = (config.side * config.side - PI * config.radius * config.radius).sqrt() * config.phi / config.uptake;
    if let (Some(a), Some(b)) = (ex_run.records.last(), pt_run.records.last()) {
        log::info!(
            "t = {}: ‖u_S‖ = {:.4}, ‖u_P‖ = {:.4}, steady value {target:.4}",
            a.t,
            a.l2,
            b.l2_tilde
        );
    }
    let mut written = Vec::new();
    write_table(dir, "fig2_exclusion.csv", &ex_table, &mut written)?;
    write_table(dir, "fig2_point.csv", &pt_table, &mut written)?;
    Ok(written)
}

/// Runs `tasks` on at most `jobs` threads, returning results in task order.
fn run_pool<T: Sync, R: Send>(tasks: Vec<T>, jobs: usize, f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<R>>> = Mutex::new((0..tasks.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..jobs.min(tasks.len()).max(1) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(task) = tasks.get(i) else { break };
                let r = f(task);
                results.lock().expect("result slot poisoned")[i] = Some(r);
            });
        }
    });
    results
        .into_inner()
        .expect("result slot poisoned")
        .into_iter()
        .map(|r| r.expect("every task produces a result"))
        .collect()
}

fn fig3_name(d: f64, a: f64) -> String {
    format!("fig3_D{d}_a{a}.csv")
}

pub fn cmd_fig3(config: &RunConfig) -> Result<Written> {
    let dir = out_dir(config)?;
    let mut members = Vec::new();
    for &a in &FIG3_UPTAKE {
        for &d in &FIG3_DIFFUSION {
            let mut c = config.clone();
            c.diffusion = d;
            c.uptake = a;
            c.validate()?;
            members.push(c);
        }
    }
    let results = run_pool(members, config.jobs, |c| {
        log::info!("fig3 member D = {}, a = {}", c.diffusion, c.uptake);
        let series = run_comparison(&c.comparison_config())?;
        let path = dir.join(fig3_name(c.diffusion, c.uptake));
        comparison_table(c, "fig3", &series).write(&path)?;
        Ok::<_, Error>((c.diffusion, c.uptake, series, path))
    });
    let mut summary = Table::new(
        &comment("fig3 summary", config),
        &["d", "a", "time_to_threshold", "final_e_l2", "time_to_plateau"],
    );
    let mut written = Vec::new();
    for r in results {
        let (d, a, series, path) = r?;
        summary.row(vec![
            d.into(),
            a.into(),
            series.time_to_threshold(THRESHOLD).into(),
            series.plateau_e_l2.into(),
            series.time_to_plateau.into(),
        ]);
        written.push(path);
    }
    write_table(dir, "fig3_summary.csv", &summary, &mut written)?;
    Ok(written)
}

/// One line of the analytic report.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub value: f64,
    pub threshold: f64,
    /// Whether `value` must stay below (true) or above (false) the threshold.
    pub below: bool,
}

impl Check {
    pub fn passed(&self) -> bool {
        if self.below {
            self.value < self.threshold
        } else {
            self.value > self.threshold
        }
    }
}

/// Runs every analytic diagnostic.
pub fn analytic_checks() -> Result<Vec<Check>> {
    let mut worst: f64 = 0.0;
    for i in 0..50 {
        let x = 1e-6 * (50.0f64 / 1e-6).powf(i as f64 / 49.0);
        let (v, q) = (exp_integral_e1(x)?, e1_by_quadrature(x)?);
        worst = worst.max((v - q).abs() / q);
    }
    let e1_one = (exp_integral_e1(1.0)? - e1_by_quadrature(1.0)?).abs();
    let summ = summability_diagnostics(100)?;
    let zeta = (crate::analytic::zeta4_partial(1000) - PI.powi(4) / 90.0).abs();

    // square-domain series minus the free-space solution near the source
    let source = Point2::new(1.2, 2.1);
    let t = 0.5;
    let params = SeriesParams::default();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for k in 2..=8 {
        let r = 10f64.powf(-0.5 * k as f64);
        let x = source + Point2::new(0.6 * r, 0.8 * r);
        let d = series_point_solution(x, t, source, &params)? - freespace_solution(x - source, t)?;
        lo = lo.min(d);
        hi = hi.max(d);
    }

    let radii: Vec<f64> = (0..7).map(|k| 0.1 * 0.1f64.powf(k as f64 / 2.0)).collect();
    let slope = singularity_profile(1.0, &radii, 10.0)?.fit.slope;
    let target = 1.0 / (2.0 * PI);

    Ok(vec![
        Check { name: "e1_quadrature_max_rel_error", value: worst, threshold: 1e-8, below: true },
        Check { name: "e1_at_1_abs_error", value: e1_one, threshold: 1e-8, below: true },
        Check { name: "zeta4_partial_1000_error", value: zeta, threshold: 5e-7, below: true },
        Check { name: "gradient_sum_log_fit_r2", value: summ.growth.r_squared, threshold: 0.99, below: false },
        Check { name: "series_minus_freespace_spread", value: hi - lo, threshold: 1e-2, below: true },
        Check { name: "singularity_slope_rel_error", value: (slope - target).abs() / target, threshold: 0.15, below: true },
    ])
}

/// Writes the analytic report; returns the files and whether every check passed.
pub fn cmd_analytic_checks(config: &RunConfig) -> Result<(Written, bool)> {
    let dir = out_dir(config)?;
    let checks = analytic_checks()?;
    let mut report = Table::new("dirac-cell analytic-checks", &["check", "value", "threshold", "pass"]);
    for c in &checks {
        println!("{} {}: {:.3e} (threshold {})", if c.passed() { "PASS" } else { "FAIL" }, c.name, c.value, c.threshold);
        report.row(vec![c.name.into(), c.value.into(), c.threshold.into(), c.passed().into()]);
    }
    let mut written = Vec::new();
    write_table(dir, "analytic_checks.csv", &report, &mut written)?;

    // reference values on (0, π)² along a ray from an off-centre source
    let source = Point2::new(1.2, 2.1);
    let params = SeriesParams::default();
    let mut values = Table::new(
        &format!("dirac-cell analytic-checks source={},{}", source.x, source.y),
        &["x", "y", "t", "series", "freespace"],
    );
    for &t in &[0.1, 0.5, 1.0] {
        for k in 1..=20 {
            let x = source + Point2::new(0.05 * k as f64, 0.0);
            values.row(vec![
                x.x.into(),
                x.y.into(),
                t.into(),
                series_point_solution(x, t, source, &params)?.into(),
                freespace_solution(x - source, t)?.into(),
            ]);
        }
    }
    write_table(dir, "analytic_values.csv", &values, &mut written)?;
    Ok((written, checks.iter().all(Check::passed)))
}
