use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use super::{Format, Mode, Settings};
use crate::bohmian::Waveguide;

#[derive(Debug, Parser)]
#[command(
    name = "bohm-tunnel",
    version,
    about = "Photon tunnelling between coupled waveguides: fields, speeds and Bohmian velocities"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fields, populations, tunnelling current and velocities along x.
    Wavefield(CommonArgs),
    /// Semi-classical tunnelling speed against detuning.
    SpeedCurve(CommonArgs),
    /// Bohmian velocities against detuning at fixed positions.
    VelocityCurve(CommonArgs),
    /// Quadratic coefficient of the auxiliary population, three ways.
    Coefficients(CommonArgs),
    /// One Bohmian trajectory.
    Trajectory(CommonArgs),
    /// Run the invariant suite; exits non-zero if any check fails.
    Verify {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, hide = true)]
        inject_j0_sign_flip: bool,
    },
    /// Regenerate the oracle reference file.
    Fixtures {
        #[arg(long)]
        out: PathBuf,
    },
}

impl Command {
    pub fn mode(&self) -> Option<Mode> {
        Some(match self {
            Command::Wavefield(_) => Mode::Wavefield,
            Command::SpeedCurve(_) => Mode::SpeedCurve,
            Command::VelocityCurve(_) => Mode::VelocityCurve,
            Command::Coefficients(_) => Mode::Coefficients,
            Command::Trajectory(_) => Mode::Trajectory,
            Command::Verify { .. } => Mode::Verify,
            Command::Fixtures { .. } => return None,
        })
    }

    pub fn common(&self) -> Option<&CommonArgs> {
        match self {
            Command::Wavefield(c)
            | Command::SpeedCurve(c)
            | Command::VelocityCurve(c)
            | Command::Coefficients(c)
            | Command::Trajectory(c)
            | Command::Verify { common: c, .. } => Some(c),
            Command::Fixtures { .. } => None,
        }
    }
}

#[derive(Clone, Debug, Default, Args)]
pub struct CommonArgs {
    /// TOML file of flat key = value settings; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub hbar: Option<f64>,
    #[arg(long)]
    pub mass: Option<f64>,
    /// Coupling constant J0 (> 0).
    #[arg(long)]
    pub coupling: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub step_potential: Option<f64>,
    /// Total energy E.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "delta")]
    pub energy: Option<f64>,
    /// Detuning E - V0 + hbar J0; sets E.
    #[arg(long, allow_hyphen_values = true)]
    pub delta: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub amplitude_re: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub amplitude_im: Option<f64>,
    #[arg(long)]
    pub x_min: Option<f64>,
    #[arg(long)]
    pub x_max: Option<f64>,
    /// Detuning sweep start, in units of hbar J0.
    #[arg(long, allow_hyphen_values = true)]
    pub delta_min: Option<f64>,
    /// Detuning sweep end, in units of hbar J0.
    #[arg(long, allow_hyphen_values = true)]
    pub delta_max: Option<f64>,
    #[arg(long)]
    pub points: Option<usize>,
    /// Comma-separated positions for the velocity curve.
    #[arg(long, value_delimiter = ',')]
    pub positions: Option<Vec<f64>>,
    #[arg(long)]
    pub x0: Option<f64>,
    #[arg(long)]
    pub waveguide: Option<Waveguide>,
    #[arg(long)]
    pub t_end: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
    /// Continuation parameter, in units of hbar J0.
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub format: Option<Format>,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl CommonArgs {
    pub fn settings(&self) -> Settings {
        Settings {
            hbar: self.hbar,
            mass: self.mass,
            coupling: self.coupling,
            step_potential: self.step_potential,
            energy: self.energy,
            delta: self.delta,
            amplitude_re: self.amplitude_re,
            amplitude_im: self.amplitude_im,
            x_min: self.x_min,
            x_max: self.x_max,
            delta_min: self.delta_min,
            delta_max: self.delta_max,
            points: self.points,
            positions: self.positions.clone(),
            x0: self.x0,
            waveguide: self.waveguide,
            t_end: self.t_end,
            dt: self.dt,
            epsilon: self.epsilon,
            format: self.format,
            out: self.out.clone(),
        }
    }
}
