//! Run configuration: TOML file with flat keys, overridden by command-line flags.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::compare::ComparisonConfig;
use crate::error::{Error, Result};
use crate::geometry::Point2;
use crate::mesh::CellSpec;
use crate::model::{defaults, InitialData, RunOptions, Setup};
use crate::point::{Coupling, PointConfig};
use crate::solver::DEFAULT_REL_TOL;

/// Every recognised configuration key, in output order.
pub const KEYS: &[&str] = &[
    "d",
    "a",
    "phi",
    "radius",
    "center",
    "l",
    "h",
    "dt",
    "t_end",
    "eps",
    "eps_is_variance",
    "nq",
    "coupling",
    "u0",
    "snapshot_times",
    "out",
    "jobs",
];

/// Resolved parameters of one invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub diffusion: f64,
    pub uptake: f64,
    pub phi: f64,
    pub radius: f64,
    pub center: Point2,
    pub side: f64,
    pub h: f64,
    pub dt: f64,
    pub t_end: f64,
    pub epsilon: f64,
    pub eps_is_variance: bool,
    pub quadrature_points: usize,
    pub coupling: Coupling,
    /// Constant initial concentration for both models.
    pub u0: f64,
    pub snapshot_times: Vec<f64>,
    pub out: PathBuf,
    pub jobs: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        use defaults::*;
        Self {
            diffusion: DIFFUSION,
            uptake: UPTAKE,
            phi: PHI,
            radius: RADIUS,
            center: Point2::new(CENTER.0, CENTER.1),
            side: SIDE,
            h: MESH_SIZE,
            dt: DT,
            t_end: T_END,
            epsilon: EPSILON,
            eps_is_variance: false,
            quadrature_points: QUADRATURE_POINTS,
            coupling: Coupling::Implicit,
            u0: 0.0,
            snapshot_times: Vec::new(),
            out: PathBuf::from("out"),
            jobs: 1,
        }
    }
}

/// Flag values; `None` keeps the file (or default) value.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub diffusion: Option<f64>,
    pub uptake: Option<f64>,
    pub phi: Option<f64>,
    pub radius: Option<f64>,
    pub center: Option<Point2>,
    pub side: Option<f64>,
    pub h: Option<f64>,
    pub dt: Option<f64>,
    pub t_end: Option<f64>,
    pub epsilon: Option<f64>,
    pub eps_is_variance: bool,
    pub quadrature_points: Option<usize>,
    pub coupling: Option<Coupling>,
    pub u0: Option<f64>,
    pub snapshot_times: Option<Vec<f64>>,
    pub out: Option<PathBuf>,
    pub jobs: Option<usize>,
}

fn number(key: &str, v: &toml::Value) -> Result<f64> {
    match v {
        toml::Value::Float(f) => Ok(*f),
        toml::Value::Integer(i) => Ok(*i as f64),
        other => Err(Error::config(key, format!("expected a number, got {}", other.type_str()))),
    }
}

fn count(key: &str, v: &toml::Value) -> Result<usize> {
    match v {
        toml::Value::Integer(i) if *i >= 0 => Ok(*i as usize),
        toml::Value::Integer(i) => Err(Error::config(key, format!("expected a non-negative integer, got {i}"))),
        other => Err(Error::config(key, format!("expected an integer, got {}", other.type_str()))),
    }
}

fn numbers(key: &str, v: &toml::Value) -> Result<Vec<f64>> {
    match v {
        toml::Value::Array(items) => items.iter().map(|x| number(key, x)).collect(),
        other => Err(Error::config(key, format!("expected an array of numbers, got {}", other.type_str()))),
    }
}

fn string<'a>(key: &str, v: &'a toml::Value) -> Result<&'a str> {
    v.as_str()
        .ok_or_else(|| Error::config(key, format!("expected a string, got {}", v.type_str())))
}

impl RunConfig {
    /// Parses TOML text on top of the defaults.
    pub fn from_toml(text: &str) -> Result<Self> {
        let table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::config("<file>", e.message().to_string()))?;
        let mut c = RunConfig::default();
        for (key, v) in &table {
            let k = key.as_str();
            match k {
                "d" => c.diffusion = number(k, v)?,
                "a" => c.uptake = number(k, v)?,
                "phi" => c.phi = number(k, v)?,
                "radius" => c.radius = number(k, v)?,
                "center" => {
                    let xy = numbers(k, v)?;
                    if xy.len() != 2 {
                        return Err(Error::config(k, format!("expected two coordinates, got {}", xy.len())));
                    }
                    c.center = Point2::new(xy[0], xy[1]);
                }
                "l" => c.side = number(k, v)?,
                "h" => c.h = number(k, v)?,
                "dt" => c.dt = number(k, v)?,
                "t_end" => c.t_end = number(k, v)?,
                "eps" => c.epsilon = number(k, v)?,
                "eps_is_variance" => {
                    c.eps_is_variance = v
                        .as_bool()
                        .ok_or_else(|| Error::config(k, format!("expected a boolean, got {}", v.type_str())))?
                }
                "nq" => c.quadrature_points = count(k, v)?,
                "coupling" => c.coupling = string(k, v)?.parse()?,
                "u0" => c.u0 = number(k, v)?,
                "snapshot_times" => c.snapshot_times = numbers(k, v)?,
                "out" => c.out = PathBuf::from(string(k, v)?),
                "jobs" => c.jobs = count(k, v)?,
                _ => return Err(Error::config(k, format!("unknown key; expected one of {}", KEYS.join(", ")))),
            }
        }
        Ok(c)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config("--config", format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn apply(&mut self, o: &Overrides) {
        macro_rules! take {
            ($($field:ident),*) => {
                $(if let Some(v) = &o.$field { self.$field = v.clone(); })*
            };
        }
        take!(diffusion, uptake, phi, radius, center, side, h, dt, t_end, epsilon, quadrature_points, coupling, u0, snapshot_times, out, jobs);
        if o.eps_is_variance {
            self.eps_is_variance = true;
        }
    }

    /// Checks every invariant, reporting the offending key.
    pub fn validate(&self) -> Result<()> {
        let positive = |key: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::config(key, format!("must be positive and finite, got {v}")))
            }
        };
        let non_negative = |key: &str, v: f64| {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::config(key, format!("must be non-negative and finite, got {v}")))
            }
        };
        positive("d", self.diffusion)?;
        non_negative("a", self.uptake)?;
        non_negative("phi", self.phi)?;
        positive("radius", self.radius)?;
        positive("l", self.side)?;
        positive("h", self.h)?;
        positive("dt", self.dt)?;
        positive("t_end", self.t_end)?;
        positive("eps", self.epsilon)?;
        if !self.u0.is_finite() {
            return Err(Error::config("u0", "must be finite"));
        }
        if self.t_end < self.dt {
            return Err(Error::config("t_end", format!("must be at least dt = {}", self.dt)));
        }
        if self.h > self.side / 2.0 {
            return Err(Error::config("h", format!("must be at most l/2 = {}", self.side / 2.0)));
        }
        if !self.center.is_finite() {
            return Err(Error::config("center", "coordinates must be finite"));
        }
        let clearance = self.cell().clearance(self.side);
        if clearance < 2.0 * self.h {
            return Err(Error::config(
                "center",
                format!(
                    "cell of radius {} at ({}, {}) keeps {clearance:.4} from the walls; at least 2h = {} is needed",
                    self.radius,
                    self.center.x,
                    self.center.y,
                    2.0 * self.h
                ),
            ));
        }
        if self.quadrature_points < 16 {
            return Err(Error::config("nq", format!("must be at least 16, got {}", self.quadrature_points)));
        }
        if self.jobs == 0 {
            return Err(Error::config("jobs", "must be at least 1"));
        }
        if let Some(t) = self.snapshot_times.iter().find(|t| !(t.is_finite() && **t >= 0.0 && **t <= self.t_end)) {
            return Err(Error::config("snapshot_times", format!("{t} lies outside [0, t_end]")));
        }
        Ok(())
    }

    pub fn cell(&self) -> CellSpec {
        CellSpec::new(self.center, self.radius, self.phi, self.uptake)
    }

    pub fn setup(&self) -> Setup {
        Setup {
            side: self.side,
            h: self.h,
            cell: self.cell(),
            diffusion: self.diffusion,
            dt: self.dt,
            t_end: self.t_end,
            rel_tol: DEFAULT_REL_TOL,
        }
    }

    pub fn options(&self) -> RunOptions {
        RunOptions {
            stop_at_steady: false,
            snapshot_times: self.snapshot_times.clone(),
        }
    }

    pub fn initial(&self) -> InitialData {
        InitialData::Constant(self.u0)
    }

    pub fn point_config(&self) -> PointConfig {
        PointConfig {
            setup: self.setup(),
            epsilon: self.epsilon,
            epsilon_is_variance: self.eps_is_variance,
            quadrature_points: self.quadrature_points,
            coupling: self.coupling,
            initial: self.initial(),
            options: self.options(),
        }
    }

    pub fn comparison_config(&self) -> ComparisonConfig {
        ComparisonConfig {
            point: self.point_config(),
            initial_excl: self.initial(),
        }
    }

    /// One-line `key=value` record of every resolved parameter except `out`/`jobs`,
    /// which do not affect results.
    pub fn describe(&self) -> String {
        let mut s = String::new();
        let _ = write!(
            s,
            "d={} a={} phi={} radius={} center={},{} l={} h={} dt={} t_end={} eps={} eps_is_variance={} nq={} coupling={} u0={}",
            self.diffusion,
            self.uptake,
            self.phi,
            self.radius,
            self.center.x,
            self.center.y,
            self.side,
            self.h,
            self.dt,
            self.t_end,
            self.epsilon,
            self.eps_is_variance,
            self.quadrature_points,
            self.coupling,
            self.u0
        );
        if !self.snapshot_times.is_empty() {
            let times: Vec<String> = self.snapshot_times.iter().map(|t| t.to_string()).collect();
            let _ = write!(s, " snapshot_times={}", times.join(","));
        }
        s
    }
}

/// Resolves the configuration: defaults, then the file, then the flags.
pub fn load_config(path: Option<&Path>, overrides: &Overrides) -> Result<RunConfig> {
    let mut config = match path {
        Some(p) => RunConfig::from_file(p)?,
        None => RunConfig::default(),
    };
    config.apply(overrides);
    config.validate()?;
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let c = RunConfig::from_toml("").unwrap();
        assert_eq!(c, RunConfig::default());
        assert_eq!(c.setup(), Setup::default());
        c.validate().unwrap();
    }

    #[test]
    fn file_keys_are_read() {
        let c = RunConfig::from_toml("d = 10\na = 0.5\ncenter = [4.0, 6]\ncoupling = \"lag\"\nsnapshot_times = [1, 2.5]\neps_is_variance = true\n").unwrap();
        assert_eq!(c.diffusion, 10.0);
        assert_eq!(c.uptake, 0.5);
        assert_eq!(c.center, Point2::new(4.0, 6.0));
        assert_eq!(c.coupling, Coupling::ExplicitLag);
        assert_eq!(c.snapshot_times, vec![1.0, 2.5]);
        assert!(c.eps_is_variance);
    }

    #[test]
    fn errors_name_the_key() {
        let key = |text: &str| match RunConfig::from_toml(text).and_then(|c| c.validate()) {
            Err(Error::Config { key, .. }) => key,
            other => panic!("expected a config error, got {other:?}"),
        };
        assert_eq!(key("bogus = 1"), "bogus");
        assert_eq!(key("d = \"fast\""), "d");
        assert_eq!(key("a = -1"), "a");
        assert_eq!(key("center = [1.0]"), "center");
        assert_eq!(key("center = [0.3, 5.0]"), "center");
        assert_eq!(key("nq = 4"), "nq");
        assert_eq!(key("coupling = \"sideways\""), "coupling");
        assert_eq!(key("dt = 1.0\nt_end = 0.5"), "t_end");
        assert_eq!(key("snapshot_times = [100.0]"), "snapshot_times");
    }

    #[test]
    fn flags_override_file() {
        let mut c = RunConfig::from_toml("d = 2.0\nh = 0.5").unwrap();
        c.apply(&Overrides {
            diffusion: Some(10.0),
            ..Overrides::default()
        });
        assert_eq!(c.diffusion, 10.0);
        assert_eq!(c.h, 0.5);
    }
}
