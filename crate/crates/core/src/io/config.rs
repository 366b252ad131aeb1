//! Run configuration from a TOML file and command-line overrides.
//!
//! ```toml
//! example = "5.1"          # or a [custom] table
//! N = [16, 32, 64]         # a single size or a list; `Ns` is an alias
//! alpha = 1.0
//! ctilde = 50.0
//! solver = "cholesky"      # or "cg"
//! solver_tol = 1e-12
//! tol = 1e-10
//! max_iter = 100
//! damping = 1.0
//! output_dir = "out"
//! csv = true
//! vtk = false
//! ```

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Deserialize;

use crate::assembly::DEFAULT_CTILDE;
use crate::control::FixedPointSettings;
use crate::geometry::LevelSet;
use crate::mesh::Square;
use crate::solver::{SolverKind, DEFAULT_TOL};
use crate::verification::{make_example, ManufacturedCase, StudySettings, ERROR_DEGREE};
use crate::{Error, Result, Side};

/// Mesh sizes used by `convergence` when none are given.
pub const DEFAULT_NS: [usize; 5] = [16, 32, 64, 128, 256];
/// Mesh size used by `run` and `export` when none is given.
pub const DEFAULT_N: usize = 64;

/// An example id written either as a string or as a bare number (`5.1`).
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum ExampleId {
    Text(String),
    Number(f64),
}

impl ExampleId {
    pub fn as_string(&self) -> String {
        match self {
            ExampleId::Text(s) => s.trim().to_string(),
            ExampleId::Number(x) => format!("{x}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum MeshSizes {
    One(usize),
    Many(Vec<usize>),
}

impl MeshSizes {
    pub fn to_vec(&self) -> Vec<usize> {
        match self {
            MeshSizes::One(n) => vec![*n],
            MeshSizes::Many(v) => v.clone(),
        }
    }
}

/// A user-defined problem with piecewise constant data and no exact solution.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomProblem {
    #[serde(default)]
    pub lower_left: [f64; 2],
    #[serde(default = "unit_side")]
    pub side: f64,
    pub a: [f64; 2],
    /// `[cx, cy, r]`; Ω₁ is the disc.
    pub circle: Option<[f64; 3]>,
    /// `[slope, offset]`; Ω₁ lies above `x₂ = slope·x₁ + offset`.
    pub line: Option<[f64; 2]>,
    #[serde(default)]
    pub f: [f64; 2],
    #[serde(default)]
    pub y_d: [f64; 2],
    #[serde(default)]
    pub g: f64,
    /// Dirichlet value per side.
    #[serde(default)]
    pub boundary: [f64; 2],
    #[serde(default = "unbounded")]
    pub bounds: [f64; 2],
}

fn unit_side() -> f64 {
    1.0
}

fn unbounded() -> [f64; 2] {
    [f64::NEG_INFINITY, f64::INFINITY]
}

/// Raw, partially specified configuration. Both the file and the command
/// line produce one; [`ConfigFile::merge`] lets the latter win.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub example: Option<ExampleId>,
    #[serde(rename = "N")]
    pub n: Option<MeshSizes>,
    #[serde(rename = "Ns")]
    pub ns: Option<Vec<usize>>,
    pub alpha: Option<f64>,
    pub ctilde: Option<f64>,
    pub solver: Option<String>,
    pub solver_tol: Option<f64>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub damping: Option<f64>,
    pub output_dir: Option<PathBuf>,
    pub csv: Option<bool>,
    pub vtk: Option<bool>,
    pub custom: Option<CustomProblem>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let de = toml::Deserializer::parse(text).map_err(|e| config_error("<root>", e.message()))?;
        serde_path_to_error::deserialize(de).map_err(|e| {
            let key = e.path().to_string();
            let key = if key == "." { "<root>".to_string() } else { key };
            config_error(&key, e.inner().message())
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        Self::parse(&text)
    }

    /// Values of `other` replace those of `self`.
    pub fn merge(self, other: ConfigFile) -> ConfigFile {
        // a mesh size from either source replaces both spellings of the other
        let (n, ns) = if other.n.is_some() || other.ns.is_some() { (other.n, other.ns) } else { (self.n, self.ns) };
        ConfigFile {
            example: other.example.or(self.example),
            n,
            ns,
            alpha: other.alpha.or(self.alpha),
            ctilde: other.ctilde.or(self.ctilde),
            solver: other.solver.or(self.solver),
            solver_tol: other.solver_tol.or(self.solver_tol),
            tol: other.tol.or(self.tol),
            max_iter: other.max_iter.or(self.max_iter),
            damping: other.damping.or(self.damping),
            output_dir: other.output_dir.or(self.output_dir),
            csv: other.csv.or(self.csv),
            vtk: other.vtk.or(self.vtk),
            custom: other.custom.or(self.custom),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProblemSource {
    Example(String),
    Custom(CustomProblem),
}

/// Validated configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub problem: ProblemSource,
    /// Explicit mesh sizes, increasing; `None` selects the command's default.
    pub ns: Option<Vec<usize>>,
    pub alpha: f64,
    pub ctilde: f64,
    pub solver: SolverKind,
    pub solver_tol: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub damping: f64,
    pub output_dir: PathBuf,
    pub csv: bool,
    pub vtk: bool,
}

fn config_error(key: &str, message: impl Into<String>) -> Error {
    Error::Config { key: key.to_string(), message: message.into() }
}

fn positive(key: &str, value: f64) -> Result<f64> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(config_error(key, format!("must be a positive finite number, got {value}")))
    }
}

impl RunConfig {
    pub fn from_file(file: ConfigFile) -> Result<Self> {
        let problem = match (file.example, file.custom) {
            (Some(_), Some(_)) => return Err(config_error("custom", "give either `example` or `[custom]`, not both")),
            (Some(id), None) => {
                let id = id.as_string();
                make_example(&id).map_err(|e| config_error("example", e.to_string()))?;
                ProblemSource::Example(id)
            }
            (None, Some(custom)) => {
                validate_custom(&custom)?;
                ProblemSource::Custom(custom)
            }
            (None, None) => return Err(config_error("example", "missing (or give a [custom] table)")),
        };
        let (key, ns) = match (file.n, file.ns) {
            (Some(_), Some(_)) => return Err(config_error("Ns", "give either `N` or `Ns`, not both")),
            (Some(n), None) => ("N", Some(n.to_vec())),
            (None, Some(ns)) => ("Ns", Some(ns)),
            (None, None) => ("N", None),
        };
        if let Some(ns) = &ns {
            if ns.is_empty() || ns.contains(&0) {
                return Err(config_error(key, "mesh sizes must be positive and nonempty"));
            }
            if ns.windows(2).any(|w| w[1] <= w[0]) {
                return Err(config_error(key, "mesh sizes must be strictly increasing"));
            }
        }
        let solver = match file.solver {
            Some(s) => s.parse::<SolverKind>().map_err(|e| config_error("solver", e.to_string()))?,
            None => SolverKind::default(),
        };
        let damping = positive("damping", file.damping.unwrap_or(1.0))?;
        if damping > 1.0 {
            return Err(config_error("damping", format!("must lie in (0, 1], got {damping}")));
        }
        let solver_tol = positive("solver_tol", file.solver_tol.unwrap_or(DEFAULT_TOL))?;
        let max_iter = file.max_iter.unwrap_or(100);
        if max_iter == 0 {
            return Err(config_error("max_iter", "must be at least 1"));
        }
        let config = RunConfig {
            problem,
            ns,
            alpha: positive("alpha", file.alpha.unwrap_or(1.0))?,
            ctilde: positive("ctilde", file.ctilde.unwrap_or(DEFAULT_CTILDE))?,
            solver,
            solver_tol,
            tol: positive("tol", file.tol.unwrap_or(1e-10))?,
            max_iter,
            damping,
            output_dir: file.output_dir.unwrap_or_else(|| PathBuf::from(".")),
            csv: file.csv.unwrap_or(true),
            vtk: file.vtk.unwrap_or(false),
        };
        config.fixed_point().validate().map_err(|e| config_error("solver_tol", e.to_string()))?;
        Ok(config)
    }

    /// Loads `path` if given, applies `overrides` and validates.
    pub fn resolve(path: Option<&Path>, overrides: ConfigFile) -> Result<Self> {
        let base = match path {
            Some(p) => ConfigFile::load(p)?,
            None => ConfigFile::default(),
        };
        Self::from_file(base.merge(overrides))
    }

    pub fn parse_str(text: &str) -> Result<Self> {
        Self::from_file(ConfigFile::parse(text)?)
    }

    pub fn problem_id(&self) -> String {
        match &self.problem {
            ProblemSource::Example(id) => id.clone(),
            ProblemSource::Custom(_) => "custom".to_string(),
        }
    }

    pub fn case(&self) -> Result<ManufacturedCase> {
        let case = match &self.problem {
            ProblemSource::Example(id) => make_example(id)?,
            ProblemSource::Custom(c) => custom_case(c)?,
        };
        Ok(case.with_alpha(self.alpha))
    }

    pub fn fixed_point(&self) -> FixedPointSettings {
        FixedPointSettings {
            tol: self.tol,
            max_iter: self.max_iter,
            damping: self.damping,
            solver: self.solver,
            solver_tol: self.solver_tol,
            initial: None,
        }
    }

    pub fn study_settings(&self) -> StudySettings {
        StudySettings { ctilde: self.ctilde, fixed_point: self.fixed_point(), error_degree: ERROR_DEGREE }
    }

    pub fn single_n(&self) -> Result<usize> {
        match self.ns.as_deref() {
            None => Ok(DEFAULT_N),
            Some([n]) => Ok(*n),
            Some(_) => Err(config_error("N", "this command needs a single mesh size")),
        }
    }

    pub fn study_ns(&self) -> Vec<usize> {
        self.ns.clone().unwrap_or_else(|| DEFAULT_NS.to_vec())
    }

    /// Creates the output directory and checks that it accepts files.
    pub fn prepare_output_dir(&self) -> Result<()> {
        let dir = &self.output_dir;
        let io = |source| Error::Io { path: dir.clone(), source };
        fs::create_dir_all(dir).map_err(io)?;
        let probe = dir.join(".cutfem-write-probe");
        fs::write(&probe, b"").map_err(io)?;
        fs::remove_file(&probe).map_err(io)
    }
}

fn validate_custom(c: &CustomProblem) -> Result<()> {
    positive("custom.side", c.side)?;
    positive("custom.a[0]", c.a[0])?;
    positive("custom.a[1]", c.a[1])?;
    match (c.circle, c.line) {
        (Some(circle), None) => {
            positive("custom.circle[2]", circle[2])?;
        }
        (None, Some(_)) => {}
        _ => return Err(config_error("custom", "give exactly one of `circle` or `line`")),
    }
    if !(c.bounds[0] <= c.bounds[1]) {
        return Err(config_error("custom.bounds", "lower bound exceeds upper bound"));
    }
    let finite = c.lower_left.iter().chain(&c.f).chain(&c.y_d).chain(&c.boundary).chain([&c.g]).all(|v| v.is_finite());
    if !finite {
        return Err(config_error("custom", "data must be finite"));
    }
    Ok(())
}

/// Builds a problem without exact solution from a `[custom]` table.
pub fn custom_case(c: &CustomProblem) -> Result<ManufacturedCase> {
    validate_custom(c)?;
    let level_set = match (c.circle, c.line) {
        (Some([cx, cy, r]), _) => LevelSet::circle([cx, cy], r),
        (None, Some([slope, offset])) => LevelSet::line_above(slope, offset),
        (None, None) => unreachable!("validated above"),
    };
    let per_side = |v: [f64; 2]| -> Arc<dyn Fn(Side, crate::Point) -> f64 + Send + Sync> {
        Arc::new(move |s: Side, _| v[s.index()])
    };
    let constant = |v: f64| -> Arc<dyn Fn(crate::Point) -> f64 + Send + Sync> { Arc::new(move |_| v) };
    Ok(ManufacturedCase {
        id: "custom".to_string(),
        domain: Square::new(c.lower_left, c.side),
        level_set,
        a: c.a,
        alpha: 1.0,
        lower: constant(c.bounds[0]),
        upper: constant(c.bounds[1]),
        f: per_side(c.f),
        g: constant(c.g),
        y_d: per_side(c.y_d),
        dirichlet: per_side(c.boundary),
        exact: None,
    })
}
