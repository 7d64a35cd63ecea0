//! Closed-form stationary fields behind the potential step, populations,
//! the small-x quadratic coefficient of the auxiliary population and the
//! semi-classical speed read off from it.
//!
//! With no back-propagating modes and an empty auxiliary waveguide at the
//! step, the fields are
//!
//! ```text
//! psi_m = (c0 / 2) (exp(i k+ x) + exp(i k- x))
//! psi_a = (c0 / 2) (exp(i k+ x) - exp(i k- x))
//! ```

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::model::{wavenumbers, PhysicalConfig, Regime, WaveNumbers};

/// Default fit window for the speed estimator, in units of
/// `1 / sqrt(2 m J0 / hbar)`.
pub const DEFAULT_FIT_WINDOW: f64 = 0.005;
/// Default number of samples inside the fit window.
pub const DEFAULT_FIT_SAMPLES: usize = 50;

/// Fields and their analytic derivatives at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WaveField {
    pub x: f64,
    pub psi_m: Complex64,
    pub psi_a: Complex64,
    pub dpsi_m_dx: Complex64,
    pub dpsi_a_dx: Complex64,
    pub d2psi_m_dx2: Complex64,
    pub d2psi_a_dx2: Complex64,
    /// Largest modulus either field can reach at `x`,
    /// `|c0| (|exp(i k+ x)| + |exp(i k- x)|) / 2`.
    pub envelope: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PopulationSample {
    pub x: f64,
    /// |psi_a|^2
    pub rho_a_raw: f64,
    /// |psi_a|^2 / (|psi_a|^2 + |psi_m|^2)
    pub rho_a_norm: f64,
}

/// Quadratic coefficient of the normalized auxiliary population from the
/// three independent routes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CoefficientReport {
    pub closed_form: f64,
    pub bohmian: f64,
    pub oracle: f64,
    pub regime: Regime,
}

impl CoefficientReport {
    /// Largest pairwise relative difference between the three routes.
    pub fn max_relative_spread(&self) -> f64 {
        let v = [self.closed_form, self.bohmian, self.oracle];
        let mut worst: f64 = 0.0;
        for i in 0..3 {
            for j in (i + 1)..3 {
                let scale = v[i].abs().max(v[j].abs());
                worst = worst.max((v[i] - v[j]).abs() / scale);
            }
        }
        worst
    }
}

/// exp(z) - 1 without cancellation for small |z|.
pub(crate) fn exp_m1(z: Complex64) -> Complex64 {
    let (a, b) = (z.re, z.im);
    let half = (0.5 * b).sin();
    Complex64::new(a.exp_m1() * b.cos() - 2.0 * half * half, a.exp() * b.sin())
}

/// The two mode exponentials and combinations of them at one point, for a
/// unit incident amplitude.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Modes {
    pub k: WaveNumbers,
    /// exp(i k+ x)
    pub e_plus: Complex64,
    /// exp(i k- x)
    pub e_minus: Complex64,
    /// |exp(i k+ x)|^2
    pub mod2_plus: f64,
    /// |exp(i k- x)|^2
    pub mod2_minus: f64,
    /// conj(exp(i k+ x)) exp(i k- x)
    pub cross: Complex64,
    /// psi_m / c0
    pub unit_m: Complex64,
    /// psi_a / c0
    pub unit_a: Complex64,
}

impl Modes {
    pub fn at(k: WaveNumbers, x: f64) -> Self {
        let i = Complex64::i();
        let e_plus = (i * k.k_plus * x).exp();
        let e_minus = (i * k.k_minus * x).exp();
        let mod2_plus = (-2.0 * k.k_plus.im * x).exp();
        let mod2_minus = (-2.0 * k.k_minus.im * x).exp();
        let cross = (i * (k.k_minus - k.k_plus.conj()) * x).exp();
        // e+ - e- is formed from the dominant exponential times expm1 of the
        // phase difference, so it keeps relative accuracy as x -> 0.
        let diff = if k.k_minus.im >= k.k_plus.im {
            -e_plus * exp_m1(i * (k.k_minus - k.k_plus) * x)
        } else {
            e_minus * exp_m1(i * (k.k_plus - k.k_minus) * x)
        };
        Self { k, e_plus, e_minus, mod2_plus, mod2_minus, cross, unit_m: (e_plus + e_minus) * 0.5, unit_a: diff * 0.5 }
    }

    /// Unit-amplitude field of one waveguide (`main = true` for psi_m).
    pub fn unit(&self, main: bool) -> Complex64 {
        if main {
            self.unit_m
        } else {
            self.unit_a
        }
    }

    /// (|e+| + |e-|) / 2
    pub fn unit_envelope(&self) -> f64 {
        0.5 * (self.mod2_plus.sqrt() + self.mod2_minus.sqrt())
    }
}

fn check_position(x: f64) -> Result<()> {
    if !x.is_finite() || x < 0.0 {
        return domain(format!("fields are defined for finite x >= 0, got {x}"));
    }
    Ok(())
}

pub(crate) fn modes(config: &PhysicalConfig, x: f64) -> Result<Modes> {
    check_position(x)?;
    Ok(Modes::at(wavenumbers(config), x))
}

/// Evaluate psi_m, psi_a and their first two x-derivatives analytically.
pub fn eval_fields(config: &PhysicalConfig, x: f64) -> Result<WaveField> {
    let md = modes(config, x)?;
    let c0 = config.amplitude();
    let i = Complex64::i();
    let (kp, km) = (md.k.k_plus, md.k.k_minus);
    let d_plus = i * kp * md.e_plus;
    let d_minus = i * km * md.e_minus;
    let dd_plus = -kp * kp * md.e_plus;
    let dd_minus = -km * km * md.e_minus;
    Ok(WaveField {
        x,
        psi_m: c0 * md.unit_m,
        psi_a: c0 * md.unit_a,
        dpsi_m_dx: c0 * 0.5 * (d_plus + d_minus),
        dpsi_a_dx: c0 * 0.5 * (d_plus - d_minus),
        d2psi_m_dx2: c0 * 0.5 * (dd_plus + dd_minus),
        d2psi_a_dx2: c0 * 0.5 * (dd_plus - dd_minus),
        envelope: c0.norm() * md.unit_envelope(),
    })
}

/// Raw and normalized auxiliary population at `x`.
pub fn population(config: &PhysicalConfig, x: f64) -> Result<PopulationSample> {
    let md = modes(config, x)?;
    let a = md.unit_a.norm_sqr();
    let total = a + md.unit_m.norm_sqr();
    if total == 0.0 || !total.is_finite() {
        return Err(Error::TailUnderflow { x });
    }
    Ok(PopulationSample { x, rho_a_raw: config.amplitude().norm_sqr() * a, rho_a_norm: a / total })
}

/// Coefficient `C` of `x^2` in the small-x expansion of the normalized
/// auxiliary population.
///
/// On the plateau `|delta| <= hbar J0` this is `m J0 / hbar`; outside it is
/// `2 m J0^2 / (sqrt|delta + hbar J0| + sqrt|delta - hbar J0|)^2`. The two
/// branches meet continuously at the regime boundaries.
pub fn rho_a_coefficient(config: &PhysicalConfig) -> f64 {
    let (m, j0, hbar) = (config.mass(), config.coupling(), config.hbar());
    let delta = config.delta();
    let hj = config.coupling_energy();
    if delta.abs() <= hj {
        m * j0 / hbar
    } else {
        let s = (delta + hj).abs().sqrt() + (delta - hj).abs().sqrt();
        2.0 * m * j0 * j0 / (s * s)
    }
}

/// Semi-classical speed `v = J0 / sqrt(C)` implied by `rho_a = (J0 x / v)^2`.
pub fn semiclassical_speed(config: &PhysicalConfig) -> f64 {
    let delta = config.delta();
    let hj = config.coupling_energy();
    if delta.abs() <= hj {
        (hj / config.mass()).sqrt()
    } else {
        let s = (delta + hj).abs().sqrt() + (delta - hj).abs().sqrt();
        s / (2.0 * config.mass()).sqrt()
    }
}

/// Fit window `(0, w]` in the config's length units corresponding to the
/// dimensionless default.
pub fn default_fit_window(config: &PhysicalConfig) -> f64 {
    DEFAULT_FIT_WINDOW / config.inverse_length_scale()
}

/// `n` uniformly spaced population samples at `x = w i / n`, `i = 1..=n`.
pub fn population_samples(config: &PhysicalConfig, window: f64, n: usize) -> Result<Vec<PopulationSample>> {
    (1..=n).map(|i| population(config, window * i as f64 / n as f64)).collect()
}

/// Least-squares estimate of `v` in `rho_a = (J0 x / v)^2` from population
/// samples inside `(0, window]`.
///
/// The model is linear in `beta = (J0 / v)^2` on the single basis function
/// `x^2`, so `beta = sum(rho x^2) / sum(x^4)`.
pub fn fit_speed_from_samples(samples: &[PopulationSample], j0: f64, window: f64) -> Result<f64> {
    if !(j0 > 0.0) || !j0.is_finite() {
        return domain(format!("coupling must be positive, got {j0}"));
    }
    if !(window > 0.0) || !window.is_finite() {
        return domain(format!("fit window must be positive, got {window}"));
    }
    if samples.len() < 3 {
        return domain(format!("need at least 3 samples, got {}", samples.len()));
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for s in samples {
        if !(s.x > 0.0 && s.x <= window) {
            return domain(format!("sample x = {} outside the window (0, {window}]", s.x));
        }
        if !(s.rho_a_norm >= 0.0) || !s.rho_a_norm.is_finite() {
            return domain(format!("population must be non-negative, got {} at x = {}", s.rho_a_norm, s.x));
        }
        let x2 = s.x * s.x;
        num += s.rho_a_norm * x2;
        den += x2 * x2;
    }
    if num == 0.0 {
        return Err(Error::DegenerateFit("all populations are zero".into()));
    }
    Ok(j0 / (num / den).sqrt())
}

/// Closed-form, Bohmian (at continuation parameter `epsilon`) and numeric
/// oracle coefficients side by side.
pub fn coefficient_report(config: &PhysicalConfig, epsilon: f64) -> Result<CoefficientReport> {
    Ok(CoefficientReport {
        closed_form: rho_a_coefficient(config),
        bohmian: crate::bohmian::rho_ab_coefficient(config, epsilon)?,
        oracle: crate::oracle::numeric_quadratic_coefficient(config)?,
        regime: config.regime(),
    })
}
