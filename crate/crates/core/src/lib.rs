//! Stationary model of photon tunnelling between two evanescently coupled
//! waveguides behind a potential step.
//!
//! The crate evaluates the closed-form fields, the population observables
//! and the semi-classical speed read off from them ([`closed_form`]), the
//! Bohmian quantities built from the same fields ([`bohmian`]), and
//! independent numerical cross-checks of both ([`oracle`]). [`verify`] runs
//! the full invariant suite and [`cli`] drives sweeps and file output.

// `!(x > 0.0)` is used on purpose: it rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bohmian;
pub mod cli;
pub mod closed_form;
pub mod error;
pub mod model;
pub mod oracle;
pub mod verify;

pub use bohmian::{PolarField, Trajectory, Waveguide};
pub use closed_form::{CoefficientReport, PopulationSample, WaveField};
pub use error::{Error, Result};
pub use model::{PhysicalConfig, Regime, WaveNumbers};
