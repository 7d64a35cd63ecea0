//! Command-line layer: settings from a TOML file and flags, validated into a
//! [`SweepRequest`], evaluated into a [`Table`] and written as CSV or JSON.
//!
//! Flags override file keys one by one. `delta` and `energy` both fix the
//! energy; supplying both in the same layer is an error, and a flag for one
//! of them discards the file's value for the other.

mod args;
mod sweeps;
mod table;

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::Deserialize;

use crate::bohmian::{Waveguide, DEFAULT_EPSILON};
use crate::error::{Error, Result};
use crate::model::PhysicalConfig;
use crate::verify::{linspace, EQUIVALENCE_DELTAS};

pub use args::{Cli, Command, CommonArgs};
pub use sweeps::{run, Output};
pub use table::{Cell, Table};

/// Keys accepted in a config file.
pub const CONFIG_KEYS: [&str; 21] = [
    "hbar",
    "mass",
    "coupling",
    "step_potential",
    "energy",
    "delta",
    "amplitude_re",
    "amplitude_im",
    "x_min",
    "x_max",
    "delta_min",
    "delta_max",
    "points",
    "positions",
    "x0",
    "waveguide",
    "t_end",
    "dt",
    "epsilon",
    "format",
    "out",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::Config(format!("unknown format `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Wavefield,
    SpeedCurve,
    VelocityCurve,
    Coefficients,
    Trajectory,
    Verify,
}

/// One layer of user settings; `None` means "not given here".
///
/// `delta_min`, `delta_max` and `epsilon` are in units of `hbar J0`;
/// `delta` is absolute, like `energy`.
#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
pub struct Settings {
    pub hbar: Option<f64>,
    pub mass: Option<f64>,
    pub coupling: Option<f64>,
    pub step_potential: Option<f64>,
    pub energy: Option<f64>,
    pub delta: Option<f64>,
    pub amplitude_re: Option<f64>,
    pub amplitude_im: Option<f64>,
    pub x_min: Option<f64>,
    pub x_max: Option<f64>,
    pub delta_min: Option<f64>,
    pub delta_max: Option<f64>,
    pub points: Option<usize>,
    pub positions: Option<Vec<f64>>,
    pub x0: Option<f64>,
    pub waveguide: Option<Waveguide>,
    pub t_end: Option<f64>,
    pub dt: Option<f64>,
    pub epsilon: Option<f64>,
    pub format: Option<Format>,
    pub out: Option<PathBuf>,
}

impl Settings {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let table: toml::Table = text.parse().map_err(|e| Error::Config(format!("invalid config: {e}")))?;
        if let Some(key) = table.keys().find(|k| !CONFIG_KEYS.contains(&k.as_str())) {
            return Err(Error::UnknownKey(key.clone()));
        }
        let settings: Settings =
            toml::Value::Table(table).try_into().map_err(|e| Error::Config(format!("invalid config: {e}")))?;
        settings.check_energy_keys()?;
        Ok(settings)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_owned(), source })?;
        Self::from_toml_str(&text)
    }

    fn check_energy_keys(&self) -> Result<()> {
        if self.delta.is_some() && self.energy.is_some() {
            return Err(Error::Config("`delta` and `energy` are mutually exclusive".into()));
        }
        Ok(())
    }

    /// `self` with every field that `top` sets replaced by `top`'s value.
    pub fn overlay(self, top: Settings) -> Result<Settings> {
        top.check_energy_keys()?;
        let energy_from_top = top.delta.is_some() || top.energy.is_some();
        let (energy, delta) = if energy_from_top { (top.energy, top.delta) } else { (self.energy, self.delta) };
        Ok(Settings {
            hbar: top.hbar.or(self.hbar),
            mass: top.mass.or(self.mass),
            coupling: top.coupling.or(self.coupling),
            step_potential: top.step_potential.or(self.step_potential),
            energy,
            delta,
            amplitude_re: top.amplitude_re.or(self.amplitude_re),
            amplitude_im: top.amplitude_im.or(self.amplitude_im),
            x_min: top.x_min.or(self.x_min),
            x_max: top.x_max.or(self.x_max),
            delta_min: top.delta_min.or(self.delta_min),
            delta_max: top.delta_max.or(self.delta_max),
            points: top.points.or(self.points),
            positions: top.positions.or(self.positions),
            x0: top.x0.or(self.x0),
            waveguide: top.waveguide.or(self.waveguide),
            t_end: top.t_end.or(self.t_end),
            dt: top.dt.or(self.dt),
            epsilon: top.epsilon.or(self.epsilon),
            format: top.format.or(self.format),
            out: top.out.or(self.out),
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Sweep {
    /// Positions `x_min..=x_max`.
    Position {
        x_min: f64,
        x_max: f64,
        points: usize,
    },
    /// Detunings in units of `hbar J0`.
    Detuning(Vec<f64>),
    None,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrajectorySettings {
    pub x0: f64,
    pub waveguide: Waveguide,
    pub t_end: f64,
    pub dt: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRequest {
    pub mode: Mode,
    pub config: PhysicalConfig,
    pub sweep: Sweep,
    /// Fixed positions of the velocity curve.
    pub positions: Vec<f64>,
    pub trajectory: TrajectorySettings,
    /// Absolute continuation parameter.
    pub epsilon: f64,
    pub format: Format,
    pub output_path: Option<PathBuf>,
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::Config(format!("`{name}` must be positive and finite, got {v}")))
    }
}

fn finite(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Config(format!("`{name}` must be finite, got {v}")))
    }
}

fn physical_config(s: &Settings) -> Result<PhysicalConfig> {
    let hbar = positive("hbar", s.hbar.unwrap_or(1.0))?;
    let mass = positive("mass", s.mass.unwrap_or(1.0))?;
    let coupling = positive("coupling", s.coupling.unwrap_or(1.0))?;
    let v0 = finite("step_potential", s.step_potential.unwrap_or(0.0))?;
    let amplitude = Complex64::new(
        finite("amplitude_re", s.amplitude_re.unwrap_or(1.0))?,
        finite("amplitude_im", s.amplitude_im.unwrap_or(0.0))?,
    );
    let config = PhysicalConfig::new(hbar, mass, coupling, v0, s.energy.unwrap_or(0.0), amplitude)?;
    match s.delta {
        Some(d) => config.with_delta(finite("delta", d)?),
        None => Ok(config),
    }
}

fn detuning_sweep(s: &Settings, mode: Mode) -> Result<Sweep> {
    let given = s.delta_min.is_some() || s.delta_max.is_some() || s.points.is_some();
    if mode == Mode::Coefficients && !given {
        return Ok(Sweep::Detuning(EQUIVALENCE_DELTAS.to_vec()));
    }
    let lo = finite("delta_min", s.delta_min.unwrap_or(-5.0))?;
    let hi = finite("delta_max", s.delta_max.unwrap_or(5.0))?;
    let n = s.points.unwrap_or(201);
    if n < 2 || lo >= hi {
        return Err(Error::Config(format!(
            "detuning sweep needs delta_min < delta_max and points >= 2, got [{lo}, {hi}] x {n}"
        )));
    }
    Ok(Sweep::Detuning(linspace(lo, hi, n)))
}

fn position_sweep(s: &Settings) -> Result<Sweep> {
    let x_min = finite("x_min", s.x_min.unwrap_or(0.0))?;
    let x_max = finite("x_max", s.x_max.unwrap_or(10.0))?;
    let points = s.points.unwrap_or(500);
    if x_min < 0.0 || x_min >= x_max || points < 2 {
        return Err(Error::Config(format!(
            "position sweep needs 0 <= x_min < x_max and points >= 2, got [{x_min}, {x_max}] x {points}"
        )));
    }
    Ok(Sweep::Position { x_min, x_max, points })
}

/// Merge the optional config file under `flags` and validate the result for `mode`.
pub fn parse_config(mode: Mode, config_file: Option<&Path>, flags: Settings) -> Result<SweepRequest> {
    let file = match config_file {
        Some(p) => Settings::from_file(p)?,
        None => Settings::default(),
    };
    build_request(mode, file.overlay(flags)?)
}

pub fn build_request(mode: Mode, s: Settings) -> Result<SweepRequest> {
    let config = physical_config(&s)?;
    let sweep = match mode {
        Mode::Wavefield => position_sweep(&s)?,
        Mode::SpeedCurve | Mode::VelocityCurve | Mode::Coefficients => detuning_sweep(&s, mode)?,
        Mode::Trajectory | Mode::Verify => Sweep::None,
    };
    let positions = s.positions.clone().unwrap_or_else(|| vec![5.0, 10.0, 20.0, 40.0]);
    if positions.is_empty() || positions.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return Err(Error::Config("`positions` must be a non-empty list of finite x >= 0".into()));
    }
    let trajectory = TrajectorySettings {
        x0: finite("x0", s.x0.unwrap_or(1.0))?,
        waveguide: s.waveguide.unwrap_or(Waveguide::Main),
        t_end: positive("t_end", s.t_end.unwrap_or(10.0))?,
        dt: positive("dt", s.dt.unwrap_or(0.01))?,
    };
    if trajectory.x0 < 0.0 {
        return Err(Error::Config(format!("`x0` must be >= 0, got {}", trajectory.x0)));
    }
    let epsilon = positive("epsilon", s.epsilon.unwrap_or(DEFAULT_EPSILON))? * config.coupling_energy();
    Ok(SweepRequest {
        mode,
        config,
        sweep,
        positions,
        trajectory,
        epsilon,
        format: s.format.unwrap_or(Format::Csv),
        output_path: s.out,
    })
}

/// Write `text` to `path`, or to stdout when `path` is `None`.
pub fn emit(text: &str, path: Option<&Path>) -> Result<()> {
    use std::io::Write;
    match path {
        Some(p) => std::fs::write(p, text).map_err(|source| Error::Io { path: p.to_owned(), source }),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|source| Error::Io { path: PathBuf::from("<stdout>"), source })
        }
    }
}
