//! Run configuration read from TOML.
//!
//! Every quantity is dimensionless: lengths are measured in the same unit as
//! the outer radius and times in units where the wave speed is 1.

use std::fs;
use std::path::{Path, PathBuf};

use debond::fields::{ProblemData, Toughness};
use debond::geometry::FrontCurve;
use debond::griffith::CoupledOptions;
use debond::prescribed::SolverOptions;
use debond::profile::{PiecewiseCubic, Profile};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub geometry: Geometry,
    pub physics: Physics,
    pub data: DataSpec,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub toughness: Vec<ToughnessPiece>,
    pub front: FrontSpec,
    #[serde(default)]
    pub numerics: Numerics,
    #[serde(default)]
    pub outputs: Outputs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Geometry {
    /// Film radius `R`.
    pub outer_radius: f64,
    /// Initial debonded width `rho0`.
    pub initial_width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Physics {
    /// Damping coefficient.
    pub alpha: f64,
    pub horizon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSpec {
    /// Rim displacement as a function of time.
    pub w: ProfileSpec,
    /// Initial displacement as a function of the distance from the rim.
    pub v0: ProfileSpec,
    /// Initial velocity.
    pub v1: ProfileSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileSpec {
    // Empty braces so that stray keys are still rejected.
    Zero {},
    Constant { value: f64 },
    Affine { offset: f64, slope: f64 },
    SineBump { amplitude: f64, start: f64, end: f64 },
    Polynomial { coefficients: Vec<f64> },
    /// Two-column CSV with header `x,y`, interpolated by a monotone cubic.
    Table { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToughnessPiece {
    /// Width at which this piece takes over.
    pub start: f64,
    pub profile: ProfileSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FrontSpec {
    /// Front driven by the Griffith criterion.
    Griffith {},
    Static {},
    Linear { speed: f64 },
    /// Piecewise-linear width through `[t, rho]` knots.
    Knots { knots: Vec<[f64; 2]> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Numerics {
    pub dt: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub window_multiplier: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stop_margin: Option<f64>,
}

impl Default for Numerics {
    fn default() -> Self {
        let s = SolverOptions::default();
        Numerics {
            dt: s.dt,
            tol: s.tol,
            max_iter: s.max_iter,
            window_multiplier: s.window_multiplier,
            stop_margin: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Outputs {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub directory: Option<PathBuf>,
    /// Absolute times of field snapshots; empty means start and end.
    pub snapshot_times: Vec<f64>,
    /// Radial samples per snapshot.
    pub snapshot_points: usize,
    pub plot: bool,
}

impl Default for Outputs {
    fn default() -> Self {
        Outputs {
            directory: None,
            snapshot_times: Vec::new(),
            snapshot_points: 65,
            plot: true,
        }
    }
}

fn config_err(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

impl ProfileSpec {
    pub fn to_profile(&self) -> Result<Profile> {
        let p = match self {
            ProfileSpec::Zero {} => Profile::Zero,
            ProfileSpec::Constant { value } => Profile::constant(*value),
            ProfileSpec::Affine { offset, slope } => Profile::affine(*offset, *slope),
            ProfileSpec::SineBump { amplitude, start, end } => Profile::sine_bump(*amplitude, *start, *end),
            ProfileSpec::Polynomial { coefficients } => Profile::polynomial(coefficients.clone()),
            ProfileSpec::Table { path } => Profile::Sampled { table: read_table(path)? },
        };
        p.validate().map_err(config_err)?;
        Ok(p)
    }

    fn anchor(&mut self, base: &Path) {
        if let ProfileSpec::Table { path } = self {
            if path.is_relative() {
                *path = base.join(&*path);
            }
        }
    }
}

#[derive(Deserialize)]
struct TableRow {
    x: f64,
    y: f64,
}

fn read_table(path: &Path) -> Result<PiecewiseCubic> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for row in reader.deserialize() {
        let row: TableRow = row.map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        xs.push(row.x);
        ys.push(row.y);
    }
    PiecewiseCubic::monotone(xs, ys).map_err(|e| config_err(format!("{}: {e}", path.display())))
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(config_err)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(config_err)
    }

    pub fn is_coupled(&self) -> bool {
        self.front == FrontSpec::Griffith {}
    }

    pub fn problem(&self) -> Result<ProblemData> {
        ProblemData::new(
            self.geometry.outer_radius,
            self.geometry.initial_width,
            self.physics.alpha,
            self.physics.horizon,
            self.data.w.to_profile()?,
            self.data.v0.to_profile()?,
            self.data.v1.to_profile()?,
        )
        .map_err(config_err)
    }

    /// The prescribed front, or `None` for a Griffith run.
    pub fn front(&self) -> Result<Option<FrontCurve>> {
        let rho0 = self.geometry.initial_width;
        let outer = self.geometry.outer_radius;
        let horizon = self.physics.horizon;
        let front = match &self.front {
            FrontSpec::Griffith {} => return Ok(None),
            FrontSpec::Static {} => FrontCurve::constant(rho0, outer, horizon),
            FrontSpec::Linear { speed } => FrontCurve::linear(rho0, *speed, outer, horizon),
            FrontSpec::Knots { knots } => {
                let last = knots.last().map(|k| k[0]).unwrap_or(0.0);
                if last < horizon {
                    return Err(config_err(format!("front knots end at t = {last}, before the horizon {horizon}")));
                }
                if knots.first().map(|k| k[1]) != Some(rho0) {
                    return Err(config_err("first front knot must be (0, initial_width)"));
                }
                FrontCurve::new(knots.iter().map(|k| (k[0], k[1])).collect(), outer)
            }
        };
        front.map(Some).map_err(config_err)
    }

    /// The toughness, if any pieces are configured.
    pub fn toughness(&self) -> Result<Option<Toughness>> {
        if self.toughness.is_empty() {
            return Ok(None);
        }
        let pieces = self
            .toughness
            .iter()
            .map(|p| Ok((p.start, p.profile.to_profile()?)))
            .collect::<Result<Vec<_>>>()?;
        Toughness::new(pieces, self.geometry.initial_width, self.geometry.outer_radius)
            .map(Some)
            .map_err(config_err)
    }

    pub fn solver(&self) -> SolverOptions {
        self.solver_at(self.numerics.dt)
    }

    pub fn solver_at(&self, dt: f64) -> SolverOptions {
        SolverOptions {
            dt,
            tol: self.numerics.tol,
            max_iter: self.numerics.max_iter,
            window_multiplier: self.numerics.window_multiplier,
        }
    }

    pub fn coupled_at(&self, dt: f64) -> CoupledOptions {
        CoupledOptions {
            solver: self.solver_at(dt),
            stop_margin: self.numerics.stop_margin,
            ..CoupledOptions::default()
        }
    }

    /// Snapshot times, defaulting to the start and the horizon.
    pub fn snapshot_times(&self) -> Vec<f64> {
        if self.outputs.snapshot_times.is_empty() {
            vec![0.0, self.physics.horizon]
        } else {
            self.outputs.snapshot_times.clone()
        }
    }

    /// Checks everything the drivers will later rely on.
    pub fn validate(&self) -> Result<()> {
        self.problem()?;
        self.front()?;
        let tough = self.toughness()?;
        if self.is_coupled() && tough.is_none() {
            return Err(config_err("a griffith front needs at least one toughness piece"));
        }
        self.solver().validate().map_err(config_err)?;
        if let Some(m) = self.numerics.stop_margin {
            if !(m >= self.numerics.dt) {
                return Err(config_err(format!("stop_margin {m} is smaller than dt")));
            }
        }
        let h = self.physics.horizon;
        if let Some(t) = self.outputs.snapshot_times.iter().find(|t| !(0.0..=h).contains(*t)) {
            return Err(config_err(format!("snapshot time {t} outside [0, {h}]")));
        }
        if self.outputs.snapshot_points < 2 {
            return Err(config_err("snapshot_points must be at least 2"));
        }
        Ok(())
    }

    fn anchor(&mut self, base: &Path) {
        self.data.w.anchor(base);
        self.data.v0.anchor(base);
        self.data.v1.anchor(base);
        for p in &mut self.toughness {
            p.profile.anchor(base);
        }
    }
}

/// Reads and validates a configuration file. Relative table paths are
/// resolved against the file's directory.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
    let mut cfg = RunConfig::from_toml(&text)?;
    cfg.anchor(path.parent().unwrap_or(Path::new(".")));
    cfg.validate()?;
    Ok(cfg)
}
