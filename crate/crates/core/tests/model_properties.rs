use std::f64::consts::PI;

use dirac_cell::compare::{comparison_config, run_comparison};
use dirac_cell::exclusion::ExclusionModel;
use dirac_cell::fem::{assemble_gaussian_load, NodalField};
use dirac_cell::mesh::{build_square_mesh, CellSpec};
use dirac_cell::model::{InitialData, RunOptions, Setup};
use dirac_cell::point::{Coupling, PointConfig, PointModel};
use dirac_cell::Point2;

fn coarse(uptake: f64, t_end: f64) -> Setup {
    Setup {
        h: 0.5,
        cell: CellSpec::new(Point2::new(5.0, 5.0), 0.25, 1.0, uptake),
        t_end,
        ..Setup::default()
    }
}

fn point(setup: Setup, coupling: Coupling) -> PointModel {
    PointModel::new(&PointConfig {
        setup,
        coupling,
        ..PointConfig::default()
    })
    .unwrap()
}

#[test]
fn lagged_coupling_balances_mass_with_the_previous_amplitude() {
    let setup = coarse(1.0, 2.0);
    let model = point(setup.clone(), Coupling::ExplicitLag);
    let run = model.run(&InitialData::Constant(0.0), &RunOptions::default()).unwrap();
    for w in run.records.windows(2) {
        let rate = (w[1].mass - w[0].mass) / setup.dt;
        assert!((rate - w[0].psi).abs() < 1e-9 * w[0].psi.abs(), "{rate} vs {}", w[0].psi);
    }
}

#[test]
fn exclusion_stays_within_the_steady_bounds() {
    // from zero data with φ = a = 1 the solution lies in [0, 1]; the consistent
    // mass matrix allows a small transient undershoot near the cell
    let setup = coarse(1.0, 4.0);
    let model = ExclusionModel::new(&setup).unwrap();
    let mut u = model.initial(&InitialData::Constant(0.0)).unwrap();
    for _ in 0..setup.num_steps() {
        u = model.step(&u).unwrap();
        let lo = u.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = u.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert!(hi < 1.0 && lo > -0.05 * hi, "{lo} {hi}");
    }
    assert!(u.iter().all(|v| *v > 0.0));
}

#[test]
fn mass_grows_monotonically_without_uptake() {
    for coupling in [Coupling::Implicit, Coupling::ExplicitLag] {
        let run = point(coarse(0.0, 2.0), coupling)
            .run(&InitialData::Constant(0.0), &RunOptions::default())
            .unwrap();
        assert!(run.records.windows(2).all(|w| w[1].mass > w[0].mass));
        let last = run.records.last().unwrap();
        assert!((last.mass - 2.0 * PI * 0.25 * last.t).abs() < 1e-9 * last.mass);
    }
}

#[test]
fn shared_steady_state_gives_no_difference() {
    let setup = coarse(2.0, 0.4);
    let series = run_comparison(&comparison_config(setup, Coupling::Implicit, 0.5)).unwrap();
    for row in &series.rows {
        assert!(row.e_l2.unwrap() < 1e-8, "t={} e={:?}", row.t, row.e_l2);
        assert!(row.abs_l2 <= row.l2_excl + row.l2_point);
    }
}

#[test]
fn relative_difference_is_scale_invariant() {
    // doubling φ and the initial data doubles both solutions
    let base = coarse(1.0, 0.4);
    let mut doubled = base.clone();
    doubled.cell.phi = 2.0;
    let a = run_comparison(&comparison_config(base, Coupling::Implicit, 0.25)).unwrap();
    let b = run_comparison(&comparison_config(doubled, Coupling::Implicit, 0.5)).unwrap();
    for (x, y) in a.rows.iter().zip(&b.rows) {
        assert!((x.e_l2.unwrap() - y.e_l2.unwrap()).abs() < 1e-8);
    }
}

#[test]
fn couplings_agree_as_the_step_shrinks() {
    let gap = |dt: f64| {
        let setup = Setup { dt, ..coarse(1.0, 1.0) };
        let a = point(setup.clone(), Coupling::Implicit)
            .run(&InitialData::Constant(0.0), &RunOptions::default())
            .unwrap();
        let b = point(setup, Coupling::ExplicitLag)
            .run(&InitialData::Constant(0.0), &RunOptions::default())
            .unwrap();
        (a.records.last().unwrap().mass - b.records.last().unwrap().mass).abs()
    };
    let (coarse_gap, fine_gap) = (gap(0.04), gap(0.01));
    assert!(fine_gap < 0.5 * coarse_gap, "{coarse_gap} -> {fine_gap}");
}

#[test]
fn point_flux_tracks_exclusion_flux() {
    let setup = coarse(1.0, 2.0);
    let ex = ExclusionModel::new(&setup)
        .unwrap()
        .run(&InitialData::Constant(0.0), &RunOptions::default())
        .unwrap();
    let pt = point(setup, Coupling::Implicit)
        .run(&InitialData::Constant(0.0), &RunOptions::default())
        .unwrap();
    let (a, b) = (ex.records.last().unwrap(), pt.records.last().unwrap());
    assert!((a.boundary_flux - b.psi).abs() < 0.05 * a.boundary_flux, "{} vs {}", a.boundary_flux, b.psi);
}

#[test]
fn gaussian_load_reproduces_the_centre() {
    // P1 hats reproduce x, so ∑ g_i x_i = ∫ δ_ε x = c on any mesh
    let c = Point2::new(3.3, 4.1);
    let err = |h: f64| {
        let mesh = build_square_mesh(8.0, h).unwrap();
        let g = assemble_gaussian_load(&mesh, c, 0.05).unwrap();
        let (mut mx, mut my) = (0.0, 0.0);
        for (gi, p) in g.iter().zip(mesh.vertices()) {
            mx += gi * p.x;
            my += gi * p.y;
        }
        Point2::new(mx, my).dist(c)
    };
    for h in [0.4, 0.2, 0.1, 0.05] {
        assert!(err(h) < 1e-12, "h={h}: {}", err(h));
    }
}

#[test]
fn perturbations_decay() {
    let setup = coarse(1.0, 2.0);
    let model = ExclusionModel::new(&setup).unwrap();
    let n = model.mesh().num_vertices();
    let m = &model.operators().mass;
    let bump = NodalField::interpolate(model.mesh(), |p| (-(p.dist(Point2::new(2.0, 7.0))).powi(2)).exp());
    let (mut u, mut v) = (NodalField::zeros(n), bump.clone());
    let mut prev = m.quadratic_form(&bump).sqrt();
    for _ in 0..setup.num_steps() {
        u = model.step(&u).unwrap();
        v = model.step(&v).unwrap();
        let d: Vec<f64> = v.iter().zip(u.iter()).map(|(a, b)| a - b).collect();
        let now = m.quadratic_form(&d).sqrt();
        assert!(now <= prev * (1.0 + 1e-12));
        prev = now;
    }
}
