//! Invariant suite over a built-in detuning sweep.
//!
//! Every check reports its worst residual next to a pinned tolerance.
//! Residuals are measured in the natural units of the base configuration:
//! energies in `hbar J0`, velocities in `sqrt(hbar J0 / m)`, lengths in
//! `sqrt(hbar / (m J0))`, densities in `|c0|^2`.

use rayon::prelude::*;
use serde::Serialize;

use crate::bohmian::{
    bohm_velocity, continuation_sweep, flux_divergence, hj_residual, integrate_trajectory, tunnelling_current,
    Waveguide, DEFAULT_EPSILON,
};
use crate::closed_form::{
    coefficient_report, default_fit_window, fit_speed_from_samples, population_samples, rho_a_coefficient,
    semiclassical_speed, PopulationSample, DEFAULT_FIT_SAMPLES,
};
use crate::error::{Error, Result};
use crate::model::{wavenumbers, PhysicalConfig, Regime};
use crate::oracle::{numeric_velocity, stationary_residual, GridSpec};

/// Detunings (units of `hbar J0`) of the Copenhagen-vs-Bohm coefficient table.
pub const EQUIVALENCE_DELTAS: [f64; 9] = [-10.0, -2.0, -1.001, -0.5, 0.0, 0.5, 1.001, 2.0, 10.0];

pub const STATIONARY_TOL: f64 = 1e-8;
pub const CONTINUITY_TOL: f64 = 1e-9;
pub const HJ_TOL: f64 = 1e-8;
pub const VELOCITY_TOL: f64 = 1e-12;
pub const PLATEAU_TOL: f64 = 1e-12;
pub const ASYMPTOTIC_TOL: f64 = 2e-4;
pub const EQUIVALENCE_TOL: f64 = 1e-4;
pub const CONTINUATION_TOL: f64 = 1e-4;
pub const FIT_TOL: f64 = 1e-6;
pub const ORACLE_VELOCITY_TOL: f64 = 1e-8;

/// Number of detunings in the residual sweeps and grid size per detuning.
pub const SWEEP_CONFIGS: usize = 50;
pub const SWEEP_POINTS: usize = 256;

#[derive(Clone, Copy, Debug, Default)]
pub struct VerifyOptions {
    /// Flip the sign of the tunnelling current in the continuity checks.
    /// Exists so tests can confirm the checks are able to fail.
    pub flip_j0_sign: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub max_residual: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    fn new(name: impl Into<String>, max_residual: f64, tolerance: f64) -> Self {
        Self::with_condition(name, max_residual, tolerance, true)
    }

    fn with_condition(name: impl Into<String>, max_residual: f64, tolerance: f64, extra: bool) -> Self {
        Self {
            name: name.into(),
            max_residual,
            tolerance,
            passed: extra && max_residual.is_finite() && max_residual < tolerance,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoefficientRow {
    pub delta_over_hj0: f64,
    pub regime: Regime,
    pub closed_form: f64,
    pub bohmian: f64,
    pub oracle: f64,
    pub max_relative_spread: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerificationReport {
    pub checks: Vec<Check>,
    pub coefficients: Vec<CoefficientRow>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// `n` evenly spaced values covering `[a, b]`.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..n).map(|i| if i + 1 == n { b } else { a + (b - a) * i as f64 / (n - 1) as f64 }).collect(),
    }
}

fn length_unit(c: &PhysicalConfig) -> f64 {
    (c.hbar() / (c.mass() * c.coupling())).sqrt()
}

/// Configurations of the residual sweep: the base parameters at detunings
/// spread over `[-10, 10] hbar J0`.
pub fn sweep_configs(base: &PhysicalConfig) -> Result<Vec<PhysicalConfig>> {
    let hj = base.coupling_energy();
    linspace(-10.0, 10.0, SWEEP_CONFIGS).into_iter().map(|d| base.with_delta(d * hj)).collect()
}

fn sweep_grid(base: &PhysicalConfig) -> Result<GridSpec> {
    GridSpec::new(0.0, 5.0 * length_unit(base), SWEEP_POINTS)
}

fn max_of(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0, |a, b| if b.is_nan() || a.is_nan() { f64::NAN } else { a.max(b) })
}

fn stationary_check(configs: &[PhysicalConfig], grid: &GridSpec) -> Result<Check> {
    let worst = configs
        .par_iter()
        .map(|c| {
            let scale = c.amplitude().norm() * c.coupling_energy();
            stationary_residual(c, grid).map(|[m, a]| m.max_abs.max(a.max_abs) / scale)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Check::new("stationary_residual", max_of(worst), STATIONARY_TOL))
}

fn continuity_checks(configs: &[PhysicalConfig], grid: &GridSpec, options: VerifyOptions) -> Result<Vec<Check>> {
    let sign = if options.flip_j0_sign { -1.0 } else { 1.0 };
    let per_config = configs
        .par_iter()
        .map(|c| {
            let scale = c.amplitude().norm_sqr() * c.coupling();
            let mut worst = [0.0f64; 2];
            for x in grid.points() {
                let j0 = sign * tunnelling_current(c, x)?;
                let main = flux_divergence(c, x, Waveguide::Main)? - j0;
                let aux = flux_divergence(c, x, Waveguide::Auxiliary)? + j0;
                worst[0] = worst[0].max(main.abs() / scale);
                worst[1] = worst[1].max(aux.abs() / scale);
            }
            Ok(worst)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(vec![
        Check::new("continuity_main", max_of(per_config.iter().map(|w| w[0])), CONTINUITY_TOL),
        Check::new("continuity_auxiliary", max_of(per_config.iter().map(|w| w[1])), CONTINUITY_TOL),
    ])
}

fn hj_check(configs: &[PhysicalConfig], grid: &GridSpec) -> Result<Check> {
    let worst = configs
        .par_iter()
        .map(|c| {
            let scale = c.energy().abs().max(c.coupling_energy());
            let mut worst = 0.0f64;
            for x in grid.points() {
                for wg in Waveguide::BOTH {
                    match hj_residual(c, x, wg) {
                        Ok(r) => worst = worst.max(r.abs() / scale),
                        Err(Error::Node { .. }) => {}
                        Err(e) => return Err(e),
                    }
                }
            }
            Ok(worst)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Check::new("hamilton_jacobi_balance", max_of(worst), HJ_TOL))
}

fn velocity_checks(configs: &[PhysicalConfig], grid: &GridSpec) -> Result<Vec<Check>> {
    let mut zero = 0.0f64;
    let mut equal = 0.0f64;
    let mut oracle = 0.0f64;
    for c in configs {
        let unit = c.speed_scale();
        let expect = c.hbar() * wavenumbers(c).mean().re / c.mass();
        for (i, x) in grid.points().into_iter().enumerate() {
            let vm = bohm_velocity(c, x, Waveguide::Main).ok();
            let va = bohm_velocity(c, x, Waveguide::Auxiliary).ok();
            match c.regime() {
                Regime::TwoEvanescent => {
                    for v in [vm, va].into_iter().flatten() {
                        zero = zero.max(v.abs() / unit);
                    }
                }
                Regime::TwoTransmission => {
                    for v in [vm, va].into_iter().flatten() {
                        equal = equal.max((v - expect).abs() / unit);
                    }
                    if let (Some(a), Some(b)) = (vm, va) {
                        equal = equal.max((a - b).abs() / unit);
                    }
                }
                Regime::MixedTransmissionEvanescent => {}
            }
            // finite-difference cross-check on a sparser subset, away from nodes
            if i % 16 == 8 {
                for (wg, v) in [(Waveguide::Main, vm), (Waveguide::Auxiliary, va)] {
                    if let Some(v) = v {
                        oracle = oracle.max((v - numeric_velocity(c, x, wg)).abs() / unit);
                    }
                }
            }
        }
    }
    Ok(vec![
        Check::new("velocity_zero_below_gap", zero, VELOCITY_TOL),
        Check::new("velocity_equal_above_gap", equal, VELOCITY_TOL),
        Check::new("velocity_vs_finite_difference", oracle, ORACLE_VELOCITY_TOL),
    ])
}

fn speed_checks(base: &PhysicalConfig) -> Result<Vec<Check>> {
    let hj = base.coupling_energy();
    let plateau = base.speed_scale();
    let mut flat = 0.0f64;
    for i in 0..100 {
        let d = -1.0 + (2.0 * i as f64 + 1.0) / 100.0;
        let v = semiclassical_speed(&base.with_delta(d * hj)?);
        flat = flat.max((v - plateau).abs() / plateau);
    }
    let far = base.with_delta(1e4 * hj)?;
    let v = semiclassical_speed(&far);
    let asymptotic = (v / (2.0 * far.delta().abs() / far.mass()).sqrt() - 1.0).abs();
    Ok(vec![Check::new("speed_plateau", flat, PLATEAU_TOL), Check::new("speed_asymptotic", asymptotic, ASYMPTOTIC_TOL)])
}

fn equivalence_checks(base: &PhysicalConfig) -> Result<(Vec<Check>, Vec<CoefficientRow>)> {
    let hj = base.coupling_energy();
    let rows = EQUIVALENCE_DELTAS
        .par_iter()
        .map(|&d| {
            let c = base.with_delta(d * hj)?;
            let r = coefficient_report(&c, DEFAULT_EPSILON * hj)?;
            Ok(CoefficientRow {
                delta_over_hj0: d,
                regime: r.regime,
                closed_form: r.closed_form,
                bohmian: r.bohmian,
                oracle: r.oracle,
                max_relative_spread: r.max_relative_spread(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let checks = rows
        .iter()
        .map(|r| {
            Check::new(
                format!("coefficient_agreement[delta/hJ0={}]", r.delta_over_hj0),
                r.max_relative_spread,
                EQUIVALENCE_TOL,
            )
        })
        .collect();
    Ok((checks, rows))
}

fn continuation_check(base: &PhysicalConfig) -> Result<Check> {
    let hj = base.coupling_energy();
    let c = base.with_delta(-5.0 * hj)?;
    let exact = rho_a_coefficient(&c);
    let sweep = continuation_sweep(&c, &[1e-3 * hj, 1e-6 * hj, 1e-9 * hj])?;
    let errors: Vec<f64> = sweep.iter().map(|&(_, v)| (v - exact).abs() / exact).collect();
    let monotone = errors.windows(2).all(|w| w[1] < w[0]);
    Ok(Check::with_condition("continuation_convergence", *errors.last().unwrap(), CONTINUATION_TOL, monotone))
}

fn fit_checks(base: &PhysicalConfig) -> Result<Vec<Check>> {
    let hj = base.coupling_energy();
    // exact quadratic model
    let beta = 0.37 * base.mass() * base.coupling() / base.hbar();
    let w = length_unit(base);
    let synthetic: Vec<PopulationSample> = (1..=50)
        .map(|i| {
            let x = w * i as f64 / 50.0;
            PopulationSample { x, rho_a_raw: beta * x * x, rho_a_norm: beta * x * x }
        })
        .collect();
    let v = fit_speed_from_samples(&synthetic, base.coupling(), w)?;
    let expect = base.coupling() / beta.sqrt();
    let exact = (v - expect).abs() / expect;

    // samples of the actual population on the plateau
    let c = base.with_delta(0.0 * hj)?;
    let window = default_fit_window(&c);
    let samples = population_samples(&c, window, DEFAULT_FIT_SAMPLES)?;
    let v = fit_speed_from_samples(&samples, c.coupling(), window)?;
    let plateau = (v - c.speed_scale()).abs() / c.speed_scale();
    Ok(vec![Check::new("fit_exact_model", exact, FIT_TOL), Check::new("fit_plateau_population", plateau, 1e-4)])
}

fn trajectory_check(base: &PhysicalConfig) -> Result<Check> {
    let hj = base.coupling_energy();
    let c = base.with_delta(2.0 * hj)?;
    let v = c.hbar() * wavenumbers(&c).mean().re / c.mass();
    let x0 = 0.5 * length_unit(&c);
    let t_end = 5.0 * length_unit(&c) / c.speed_scale();
    let tr = integrate_trajectory(&c, x0, Waveguide::Auxiliary, t_end, t_end / 500.0)?;
    let worst =
        tr.times.iter().zip(&tr.positions).map(|(t, x)| (x - (x0 + v * t)).abs() / length_unit(&c)).fold(0.0, f64::max);
    Ok(Check::with_condition("trajectory_constant_velocity", worst, 1e-10, !tr.truncated))
}

/// Run every check over the built-in sweep around `base` (its detuning is
/// ignored; all other parameters are kept).
pub fn run_verification(base: &PhysicalConfig, options: VerifyOptions) -> Result<VerificationReport> {
    if !(base.coupling() > 0.0) {
        return Err(Error::Config("verification needs a positive coupling".into()));
    }
    let configs = sweep_configs(base)?;
    let grid = sweep_grid(base)?;
    let mut checks = vec![stationary_check(&configs, &grid)?];
    checks.extend(continuity_checks(&configs, &grid, options)?);
    checks.push(hj_check(&configs, &grid)?);
    checks.extend(velocity_checks(&configs, &grid)?);
    checks.extend(speed_checks(base)?);
    let (eq, coefficients) = equivalence_checks(base)?;
    checks.extend(eq);
    checks.push(continuation_check(base)?);
    checks.extend(fit_checks(base)?);
    checks.push(trajectory_check(base)?);
    Ok(VerificationReport { checks, coefficients })
}
