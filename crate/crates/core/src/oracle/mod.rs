//! Brute-force cross-checks that only look at field values.
//!
//! Everything here differentiates `psi` numerically (five-point stencils
//! with Richardson extrapolation) or fits sampled populations; none of it
//! touches the analytic derivatives in [`crate::bohmian`]. The closed form
//! is entire in `x`, so stencils are allowed to reach slightly behind the
//! step at `x = 0`.

pub mod fixtures;
pub mod stencil;

use num_complex::Complex64;
use serde::Serialize;

use crate::bohmian::Waveguide;
use crate::closed_form::{population, Modes};
use crate::error::{domain, Error, Result};
use crate::model::{wavenumbers, PhysicalConfig};

/// Richardson levels used for every derivative in this module.
pub const RICHARDSON_LEVELS: usize = 3;

/// Dimensionless windows (units of `1 / sqrt(2 m J0 / hbar)`) for the
/// quadratic-coefficient fit, largest first.
pub const COEFFICIENT_WINDOWS: [f64; 3] = [1e-2, 1e-3, 1e-4];
/// Relative change between successive windows accepted as converged.
pub const COEFFICIENT_STABILITY: f64 = 1e-6;
const COEFFICIENT_SAMPLES: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GridSpec {
    x_min: f64,
    x_max: f64,
    n_points: usize,
}

impl GridSpec {
    pub fn new(x_min: f64, x_max: f64, n_points: usize) -> Result<Self> {
        if !(x_min >= 0.0) || !x_max.is_finite() || !(x_max > x_min) {
            return domain(format!("grid needs 0 <= x_min < x_max, got [{x_min}, {x_max}]"));
        }
        if n_points < 16 {
            return domain(format!("grid needs at least 16 points, got {n_points}"));
        }
        Ok(Self { x_min, x_max, n_points })
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn spacing(&self) -> f64 {
        (self.x_max - self.x_min) / (self.n_points - 1) as f64
    }

    pub fn point(&self, i: usize) -> f64 {
        if i + 1 == self.n_points {
            self.x_max
        } else {
            self.x_min + i as f64 * self.spacing()
        }
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.point(i)).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResidualReport {
    pub max_abs: f64,
    /// Position of `max_abs`.
    pub location: f64,
    pub per_point: Vec<(f64, f64)>,
    /// Grid spacing times the largest wavenumber exceeds 1, so stencil
    /// truncation may dominate the residual.
    pub coarse_spacing: bool,
}

impl ResidualReport {
    fn from_points(per_point: Vec<(f64, f64)>, coarse_spacing: bool) -> Self {
        let (location, max_abs) =
            per_point.iter().fold((f64::NAN, 0.0), |acc, &(x, r)| if r >= acc.1 { (x, r) } else { acc });
        Self { max_abs, location, per_point, coarse_spacing }
    }
}

/// Closed-form fields at any real `x` (no `x >= 0` check).
pub fn field_values(config: &PhysicalConfig, x: f64) -> (Complex64, Complex64) {
    let md = Modes::at(wavenumbers(config), x);
    (config.amplitude() * md.unit_m, config.amplitude() * md.unit_a)
}

fn select(wg: Waveguide, pair: (Complex64, Complex64)) -> Complex64 {
    match wg {
        Waveguide::Main => pair.0,
        Waveguide::Auxiliary => pair.1,
    }
}

fn k_max(config: &PhysicalConfig) -> f64 {
    let k = wavenumbers(config);
    k.k_plus.norm().max(k.k_minus.norm())
}

/// Stencil step for point-wise derivatives: a small fraction of the
/// shortest length scale of the fields.
fn pointwise_step(config: &PhysicalConfig) -> f64 {
    0.05 / k_max(config).max(1.0)
}

/// Residual of both stationary coupled equations,
/// `E psi_i - [-(hbar^2/2m) psi_i'' + V0 psi_i + hbar J0 (psi_j - psi_i)]`,
/// for the closed-form fields.
pub fn stationary_residual(config: &PhysicalConfig, grid: &GridSpec) -> Result<[ResidualReport; 2]> {
    stationary_residual_with(config, grid, |x| Ok(field_values(config, x)))
}

/// Same check for an arbitrary field pair `x -> (psi_m, psi_a)`. The second
/// derivative uses a five-point stencil at the grid spacing, extrapolated
/// over two halvings; only points whose stencil stays inside the grid are
/// reported.
pub fn stationary_residual_with<F>(config: &PhysicalConfig, grid: &GridSpec, field: F) -> Result<[ResidualReport; 2]>
where
    F: Fn(f64) -> Result<(Complex64, Complex64)>,
{
    let h = grid.spacing();
    let kinetic = config.hbar() * config.hbar() / (2.0 * config.mass());
    let hj = config.coupling_energy();
    let (e, v0) = (config.energy(), config.step_potential());
    let coarse = h * k_max(config) > 1.0;

    let mut pts = [Vec::new(), Vec::new()];
    for i in 2..grid.n_points() - 2 {
        let x = grid.point(i);
        // propagate the first evaluation error out of the stencil closures
        let (psi_m, psi_a) = field(x)?;
        for (g, wg) in Waveguide::BOTH.into_iter().enumerate() {
            let f = |s: f64| field(s).map(|p| select(wg, p)).unwrap_or(Complex64::new(f64::NAN, f64::NAN));
            let d2 = stencil::second_derivative(&f, x, h, RICHARDSON_LEVELS);
            let (own, other) = if g == 0 { (psi_m, psi_a) } else { (psi_a, psi_m) };
            let r = e * own - (-kinetic * d2 + v0 * own + hj * (other - own));
            if !r.norm().is_finite() {
                return Err(Error::Domain(format!("field evaluation failed near x = {x}")));
            }
            pts[g].push((x, r.norm()));
        }
    }
    let [m, a] = pts;
    Ok([ResidualReport::from_points(m, coarse), ResidualReport::from_points(a, coarse)])
}

/// Least-squares fit of `a t^2 + b t^3` on `t = x / w in (0, 1]`; returns
/// the `x^2` coefficient `a / w^2`.
fn quadratic_cubic_fit(samples: &[(f64, f64)], w: f64) -> f64 {
    let (mut s4, mut s5, mut s6, mut r2, mut r3) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(x, rho) in samples {
        let t = x / w;
        let t2 = t * t;
        s4 += t2 * t2;
        s5 += t2 * t2 * t;
        s6 += t2 * t2 * t2;
        r2 += rho * t2;
        r3 += rho * t2 * t;
    }
    let det = s4 * s6 - s5 * s5;
    let a = (r2 * s6 - r3 * s5) / det;
    a / (w * w)
}

/// Quadratic coefficient of the normalized auxiliary population extracted
/// from sampled values on shrinking windows.
///
/// Returns the coefficient from the smallest window whose value changed by
/// at most [`COEFFICIENT_STABILITY`] relative to the previous window.
pub fn numeric_quadratic_coefficient(config: &PhysicalConfig) -> Result<f64> {
    let (values, _) = coefficient_windows(config)?;
    let mut accepted = None;
    for pair in values.windows(2) {
        let change = (pair[1] - pair[0]).abs() / pair[1].abs();
        if change <= COEFFICIENT_STABILITY {
            accepted = Some(pair[1]);
        }
    }
    accepted.ok_or_else(|| {
        Error::ConvergenceFailure(format!("window sequence {values:?} at delta = {} never stabilised", config.delta()))
    })
}

/// Fitted coefficient for each window in [`COEFFICIENT_WINDOWS`], together
/// with the windows in the config's length units.
pub fn coefficient_windows(config: &PhysicalConfig) -> Result<(Vec<f64>, Vec<f64>)> {
    let scale = config.inverse_length_scale();
    if !(scale > 0.0) {
        return domain("coefficient extraction needs a positive coupling");
    }
    let mut values = Vec::with_capacity(COEFFICIENT_WINDOWS.len());
    let mut widths = Vec::with_capacity(COEFFICIENT_WINDOWS.len());
    for w in COEFFICIENT_WINDOWS.map(|w| w / scale) {
        let samples = (1..=COEFFICIENT_SAMPLES)
            .map(|i| {
                let x = w * i as f64 / COEFFICIENT_SAMPLES as f64;
                population(config, x).map(|p| (x, p.rho_a_norm))
            })
            .collect::<Result<Vec<_>>>()?;
        values.push(quadratic_cubic_fit(&samples, w));
        widths.push(w);
    }
    Ok((values, widths))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub level: usize,
    pub step: f64,
    pub value: f64,
    /// |value - value at the finest level|
    pub error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
    /// Observed order between successive non-finest levels.
    pub observed_orders: Vec<f64>,
    /// Errors strictly decrease towards the finest level (or are all at
    /// round-off).
    pub monotone: bool,
}

impl ConvergenceReport {
    pub fn min_order(&self) -> f64 {
        self.observed_orders.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_error(&self) -> f64 {
        self.rows.iter().map(|r| r.error).fold(0.0, f64::max)
    }
}

/// Evaluate a quantity at each step size (coarse to fine) and measure how
/// the error against the finest level falls off.
pub fn convergence_check<E>(evaluate: E, steps: &[f64]) -> Result<ConvergenceReport>
where
    E: Fn(f64) -> Result<f64>,
{
    if steps.len() < 3 {
        return domain(format!("convergence check needs at least 3 levels, got {}", steps.len()));
    }
    let values = steps.iter().map(|&h| evaluate(h)).collect::<Result<Vec<_>>>()?;
    let finest = *values.last().unwrap();
    let rows: Vec<ConvergenceRow> = values
        .iter()
        .zip(steps)
        .enumerate()
        .map(|(level, (&value, &step))| ConvergenceRow { level, step, value, error: (value - finest).abs() })
        .collect();
    let roundoff = 64.0 * f64::EPSILON * finest.abs().max(f64::MIN_POSITIVE);
    let coarse = &rows[..rows.len() - 1];
    let all_roundoff = coarse.iter().all(|r| r.error <= roundoff);
    let monotone = all_roundoff || coarse.windows(2).all(|w| w[1].error < w[0].error);
    let observed_orders = if all_roundoff {
        Vec::new()
    } else {
        coarse.windows(2).map(|w| (w[0].error / w[1].error).ln() / (w[0].step / w[1].step).ln()).collect()
    };
    Ok(ConvergenceReport { rows, observed_orders, monotone })
}

/// `(hbar / m) Im(psi* psi') / |psi|^2` with a numerically differentiated `psi'`.
pub fn numeric_velocity(config: &PhysicalConfig, x: f64, waveguide: Waveguide) -> f64 {
    let f = |s: f64| select(waveguide, field_values(config, s));
    let d = stencil::first_derivative(&f, x, pointwise_step(config), RICHARDSON_LEVELS);
    let psi = f(x);
    config.hbar() / config.mass() * (psi.conj() * d).im / psi.norm_sqr()
}

/// `(hbar / m) Im(psi* psi')` with a numerically differentiated `psi'`.
pub fn numeric_flux(config: &PhysicalConfig, x: f64, waveguide: Waveguide) -> f64 {
    let f = |s: f64| select(waveguide, field_values(config, s));
    let d = stencil::first_derivative(&f, x, pointwise_step(config), RICHARDSON_LEVELS);
    config.hbar() / config.mass() * (f(x).conj() * d).im
}

/// `d/dx (R^2 v)` as a numerical derivative of [`numeric_flux`].
pub fn numeric_flux_divergence(config: &PhysicalConfig, x: f64, waveguide: Waveguide) -> f64 {
    let g = |s: f64| Complex64::new(numeric_flux(config, s, waveguide), 0.0);
    stencil::first_derivative(&g, x, 4.0 * pointwise_step(config), RICHARDSON_LEVELS).re
}

/// `-(hbar^2 / 2m) R'' / R` with `R = |psi|` differentiated numerically.
pub fn numeric_quantum_potential(config: &PhysicalConfig, x: f64, waveguide: Waveguide) -> f64 {
    let r = |s: f64| Complex64::new(select(waveguide, field_values(config, s)).norm(), 0.0);
    let d2 = stencil::second_derivative(&r, x, pointwise_step(config), RICHARDSON_LEVELS).re;
    -config.hbar() * config.hbar() / (2.0 * config.mass()) * d2 / r(x).re
}

/// Classic RK4 on `dx/dt = numeric_velocity(x)`; returns the position at `t_end`.
pub fn numeric_trajectory_end(config: &PhysicalConfig, x0: f64, waveguide: Waveguide, t_end: f64, dt: f64) -> f64 {
    let v = |x: f64| numeric_velocity(config, x, waveguide);
    let steps = (t_end / dt).round().max(1.0) as usize;
    let h = t_end / steps as f64;
    let mut x = x0;
    for _ in 0..steps {
        let k1 = v(x);
        let k2 = v(x + 0.5 * h * k1);
        let k3 = v(x + 0.5 * h * k2);
        let k4 = v(x + h * k3);
        x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    x
}
