//! Command-line front end.
//!
//! Exit codes: 0 success, 2 configuration error, 3 runtime (solver, mesh, i/o)
//! error, 4 analytic check failure.

mod commands;
mod config;
pub mod csv;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, ValueEnum};

use crate::error::Error;
use crate::geometry::Point2;
use crate::point::Coupling;

pub use commands::{
    analytic_checks, cmd_analytic_checks, cmd_compare, cmd_fig2, cmd_fig3, cmd_mesh, cmd_run_exclusion, cmd_run_point,
    Check, Written, FIG3_DIFFUSION, FIG3_UPTAKE, THRESHOLD,
};
pub use config::{load_config, Overrides, RunConfig, KEYS};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;
pub const EXIT_ANALYTIC: i32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Mesh,
    RunExclusion,
    RunPoint,
    Compare,
    AnalyticChecks,
    Fig2,
    Fig3,
}

fn parse_center(s: &str) -> Result<Point2, String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(format!("expected X,Y, got `{s}`"));
    }
    let x = parts[0].trim().parse::<f64>().map_err(|e| e.to_string())?;
    let y = parts[1].trim().parse::<f64>().map_err(|e| e.to_string())?;
    Ok(Point2::new(x, y))
}

/// Diffusion around a secreting cell: exclusion model vs point-source model.
#[derive(Debug, Parser)]
#[command(name = "dirac-cell", version, allow_negative_numbers = true)]
pub struct Cli {
    #[arg(value_enum)]
    pub mode: Mode,
    /// TOML file with flat keys (d, a, phi, radius, center, l, h, dt, t_end, eps, ...).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Diffusion coefficient D.
    #[arg(long)]
    pub d: Option<f64>,
    /// Uptake rate a ≥ 0.
    #[arg(long)]
    pub a: Option<f64>,
    /// Secretion flux φ.
    #[arg(long)]
    pub phi: Option<f64>,
    /// Cell radius R.
    #[arg(long)]
    pub radius: Option<f64>,
    /// Cell centre as X,Y.
    #[arg(long, value_parser = parse_center)]
    pub center: Option<Point2>,
    /// Side length L of the square domain.
    #[arg(long)]
    pub l: Option<f64>,
    /// Target mesh size.
    #[arg(long)]
    pub h: Option<f64>,
    /// Time step.
    #[arg(long)]
    pub dt: Option<f64>,
    /// Final time.
    #[arg(long = "t-end")]
    pub t_end: Option<f64>,
    /// Width of the regularizing Gaussian (standard deviation unless --eps-is-variance).
    #[arg(long)]
    pub eps: Option<f64>,
    /// Read --eps as the variance σ².
    #[arg(long = "eps-is-variance")]
    pub eps_is_variance: bool,
    /// Quadrature points on the virtual cell boundary.
    #[arg(long)]
    pub nq: Option<usize>,
    /// Treatment of the flux amplitude in the point model: implicit or lag.
    #[arg(long, value_parser = |s: &str| s.parse::<Coupling>().map_err(|e| e.to_string()))]
    pub coupling: Option<Coupling>,
    /// Constant initial concentration.
    #[arg(long)]
    pub u0: Option<f64>,
    /// Comma-separated times at which VTK snapshots are written.
    #[arg(long = "snapshot-times", value_delimiter = ',')]
    pub snapshot_times: Vec<f64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Concurrent sweep members.
    #[arg(long)]
    pub jobs: Option<usize>,
}

impl Cli {
    pub fn overrides(&self) -> Overrides {
        Overrides {
            diffusion: self.d,
            uptake: self.a,
            phi: self.phi,
            radius: self.radius,
            center: self.center,
            side: self.l,
            h: self.h,
            dt: self.dt,
            t_end: self.t_end,
            epsilon: self.eps,
            eps_is_variance: self.eps_is_variance,
            quadrature_points: self.nq,
            coupling: self.coupling,
            u0: self.u0,
            snapshot_times: (!self.snapshot_times.is_empty()).then(|| self.snapshot_times.clone()),
            out: self.out.clone(),
            jobs: self.jobs,
        }
    }
}

/// Exit code for an error escaping a command.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config { .. } => EXIT_CONFIG,
        _ => EXIT_RUNTIME,
    }
}

/// Executes one parsed invocation and returns the process exit code.
pub fn execute(cli: &Cli) -> i32 {
    let config = match load_config(cli.config.as_deref(), &cli.overrides()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code(&e);
        }
    };
    let result = match cli.mode {
        Mode::Mesh => cmd_mesh(&config),
        Mode::RunExclusion => cmd_run_exclusion(&config),
        Mode::RunPoint => cmd_run_point(&config),
        Mode::Compare => cmd_compare(&config),
        Mode::Fig2 => cmd_fig2(&config),
        Mode::Fig3 => cmd_fig3(&config),
        Mode::AnalyticChecks => match cmd_analytic_checks(&config) {
            Ok((written, true)) => Ok(written),
            Ok((written, false)) => {
                report(&written);
                eprintln!("error: analytic checks failed");
                return EXIT_ANALYTIC;
            }
            Err(e) => Err(e),
        },
    };
    match result {
        Ok(written) => {
            report(&written);
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn report(written: &[PathBuf]) {
    for p in written {
        println!("wrote {}", p.display());
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => execute(&cli),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            code
        }
    }
}
