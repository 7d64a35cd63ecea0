//! Model parameters, the detuning, regime classification and the two
//! complex wavenumbers of the coupled-waveguide modes.
//!
//! The stationary equations are
//!
//! ```text
//! E psi_m = -(hbar^2 / 2m) psi_m'' + V0 psi_m + hbar J0 (psi_a - psi_m)
//! E psi_a = -(hbar^2 / 2m) psi_a'' + V0 psi_a + hbar J0 (psi_m - psi_a)
//! ```
//!
//! The symmetric combination `psi_m + psi_a` carries wavenumber `k_plus`
//! and the antisymmetric one `psi_m - psi_a` carries `k_minus`.

use std::fmt;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{domain, Error, Result};

/// All parameters of the stationary two-waveguide problem.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PhysicalConfig {
    hbar: f64,
    mass: f64,
    coupling: f64,
    step_potential: f64,
    energy: f64,
    #[serde(serialize_with = "serialize_complex")]
    amplitude: Complex64,
}

fn serialize_complex<S: serde::Serializer>(z: &Complex64, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeTuple;
    let mut t = s.serialize_tuple(2)?;
    t.serialize_element(&z.re)?;
    t.serialize_element(&z.im)?;
    t.end()
}

impl PhysicalConfig {
    /// Validated constructor.
    ///
    /// A coupling of exactly zero is accepted as the decoupled limit (the
    /// auxiliary field then vanishes identically); negative couplings are
    /// rejected.
    pub fn new(
        hbar: f64,
        mass: f64,
        coupling: f64,
        step_potential: f64,
        energy: f64,
        amplitude: Complex64,
    ) -> Result<Self> {
        let all = [hbar, mass, coupling, step_potential, energy, amplitude.re, amplitude.im];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("parameters must be finite".into()));
        }
        if hbar <= 0.0 {
            return Err(Error::Config(format!("hbar must be positive, got {hbar}")));
        }
        if mass <= 0.0 {
            return Err(Error::Config(format!("mass must be positive, got {mass}")));
        }
        if coupling < 0.0 {
            return Err(Error::Config(format!("coupling must be non-negative, got {coupling}")));
        }
        if amplitude.norm_sqr() == 0.0 {
            return Err(Error::Config("amplitude must be non-zero".into()));
        }
        let cfg = Self { hbar, mass, coupling, step_potential, energy, amplitude };
        if !cfg.delta().is_finite() {
            return Err(Error::Config("detuning is not finite".into()));
        }
        Ok(cfg)
    }

    /// Dimensionless units (hbar = m = J0 = 1, V0 = 0, c0 = 1) at the given
    /// detuning.
    pub fn dimensionless(delta: f64) -> Result<Self> {
        Self::new(1.0, 1.0, 1.0, 0.0, 0.0, Complex64::new(1.0, 0.0))?.with_delta(delta)
    }

    /// Same parameters, with the energy shifted so that the detuning equals
    /// `delta`.
    pub fn with_delta(self, delta: f64) -> Result<Self> {
        let energy = delta + self.step_potential - self.hbar * self.coupling;
        Self::new(self.hbar, self.mass, self.coupling, self.step_potential, energy, self.amplitude)
    }

    pub fn with_energy(self, energy: f64) -> Result<Self> {
        Self::new(self.hbar, self.mass, self.coupling, self.step_potential, energy, self.amplitude)
    }

    pub fn with_amplitude(self, amplitude: Complex64) -> Result<Self> {
        Self::new(self.hbar, self.mass, self.coupling, self.step_potential, self.energy, amplitude)
    }

    pub fn with_coupling(self, coupling: f64) -> Result<Self> {
        Self::new(self.hbar, self.mass, coupling, self.step_potential, self.energy, self.amplitude)
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// J0, the inter-waveguide coupling rate.
    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    /// V0.
    pub fn step_potential(&self) -> f64 {
        self.step_potential
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }

    /// c0, the incident amplitude in the main waveguide.
    pub fn amplitude(&self) -> Complex64 {
        self.amplitude
    }

    /// hbar * J0, the coupling energy scale.
    pub fn coupling_energy(&self) -> f64 {
        self.hbar * self.coupling
    }

    pub fn delta(&self) -> f64 {
        detuning(self)
    }

    pub fn regime(&self) -> Regime {
        // delta is finite and hbar J0 >= 0 by construction
        classify_regime(self.delta(), self.coupling_energy()).expect("validated config")
    }

    /// Angular frequency of the stationary time factor exp(-i omega t).
    pub fn omega(&self) -> f64 {
        self.energy / self.hbar
    }

    /// Inverse length scale sqrt(2 m J0 / hbar) used for dimensionless axes.
    pub fn inverse_length_scale(&self) -> f64 {
        (2.0 * self.mass * self.coupling / self.hbar).sqrt()
    }

    /// Velocity scale sqrt(hbar J0 / m); equals the plateau speed.
    pub fn speed_scale(&self) -> f64 {
        (self.hbar * self.coupling / self.mass).sqrt()
    }
}

/// Dynamical regime selected by the detuning.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// Both wavenumbers real.
    TwoTransmission,
    /// `k_plus` evanescent, `k_minus` propagating.
    #[serde(rename = "mixed")]
    MixedTransmissionEvanescent,
    /// Both wavenumbers imaginary.
    TwoEvanescent,
}

impl Regime {
    pub fn label(&self) -> &'static str {
        match self {
            Regime::TwoTransmission => "two-transmission",
            Regime::MixedTransmissionEvanescent => "mixed",
            Regime::TwoEvanescent => "two-evanescent",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WaveNumbers {
    pub k_plus: Complex64,
    pub k_minus: Complex64,
}

impl WaveNumbers {
    pub fn mean(&self) -> Complex64 {
        (self.k_plus + self.k_minus) * 0.5
    }
}

/// E - V0 + hbar J0.
pub fn detuning(config: &PhysicalConfig) -> f64 {
    config.energy - config.step_potential + config.hbar * config.coupling
}

/// Partition of the detuning axis. The upper boundary `delta = hbar J0`
/// belongs to the mixed regime and the lower boundary `delta = -hbar J0`
/// to the two-evanescent regime.
pub fn classify_regime(delta: f64, hbar_j0: f64) -> Result<Regime> {
    if !delta.is_finite() {
        return domain(format!("detuning must be finite, got {delta}"));
    }
    if !(hbar_j0 >= 0.0) || !hbar_j0.is_finite() {
        return domain(format!("hbar*J0 must be finite and non-negative, got {hbar_j0}"));
    }
    Ok(if delta > hbar_j0 {
        Regime::TwoTransmission
    } else if delta > -hbar_j0 {
        Regime::MixedTransmissionEvanescent
    } else {
        Regime::TwoEvanescent
    })
}

/// Principal square root with a non-negative imaginary part on the real
/// axis, so a negative radicand maps to `+i sqrt(|x|)`.
///
/// Uses the half-angle form `sqrt((|z| + |x|) / 2)` for the larger component
/// and `y / (2 t)` for the smaller one, which stays accurate when `|y|` is
/// many orders of magnitude below `|x|`.
pub fn principal_sqrt(z: Complex64) -> Complex64 {
    let (x, y) = (z.re, z.im);
    if x == 0.0 && y == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let t = ((z.norm() + x.abs()) * 0.5).sqrt();
    if x >= 0.0 {
        Complex64::new(t, y / (2.0 * t))
    } else {
        // y == -0.0 is treated as the upper lip of the cut
        let im = if y < 0.0 { -t } else { t };
        Complex64::new(y.abs() / (2.0 * t), im)
    }
}

/// Wavenumbers at a (possibly complexified) detuning.
pub fn wavenumbers_at(config: &PhysicalConfig, delta: Complex64) -> WaveNumbers {
    let scale = 2.0 * config.mass / (config.hbar * config.hbar);
    let hj = config.coupling_energy();
    WaveNumbers { k_plus: principal_sqrt((delta - hj) * scale), k_minus: principal_sqrt((delta + hj) * scale) }
}

/// k± = sqrt(2m(delta ∓ hbar J0)) / hbar on the branch with Im k >= 0.
pub fn wavenumbers(config: &PhysicalConfig) -> WaveNumbers {
    wavenumbers_at(config, Complex64::new(config.delta(), 0.0))
}

/// Effective photon mass from the longitudinal resonance energy, E_z = m c^2.
pub fn mass_from_resonance(resonance_energy: f64, medium_speed: f64) -> Result<f64> {
    if !(resonance_energy > 0.0) || !resonance_energy.is_finite() {
        return domain(format!("resonance energy must be positive, got {resonance_energy}"));
    }
    if !(medium_speed > 0.0) || !medium_speed.is_finite() {
        return domain(format!("speed in the medium must be positive, got {medium_speed}"));
    }
    Ok(resonance_energy / (medium_speed * medium_speed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * a.abs().max(b.abs()).max(1e-300)
    }

    fn cfg(energy: f64, v0: f64) -> PhysicalConfig {
        PhysicalConfig::new(1.0, 1.0, 1.0, v0, energy, Complex64::new(1.0, 0.0)).unwrap()
    }

    #[test]
    fn detuning_examples() {
        assert_eq!(detuning(&cfg(2.0, 1.0)), 2.0);
        assert_eq!(detuning(&cfg(0.0, 0.0)), 1.0);
        assert_eq!(detuning(&cfg(-3.0, 0.0)), -2.0);
    }

    #[test]
    fn regime_examples_and_boundaries() {
        assert_eq!(classify_regime(2.0, 1.0).unwrap(), Regime::TwoTransmission);
        assert_eq!(classify_regime(0.0, 1.0).unwrap(), Regime::MixedTransmissionEvanescent);
        assert_eq!(classify_regime(-2.0, 1.0).unwrap(), Regime::TwoEvanescent);
        assert_eq!(classify_regime(1.0, 1.0).unwrap(), Regime::MixedTransmissionEvanescent);
        assert_eq!(classify_regime(-1.0, 1.0).unwrap(), Regime::TwoEvanescent);
        assert!(classify_regime(f64::NAN, 1.0).is_err());
        assert!(classify_regime(f64::INFINITY, 1.0).is_err());
        assert!(classify_regime(0.0, -1.0).is_err());
    }

    #[test]
    fn wavenumber_examples() {
        let k = wavenumbers(&PhysicalConfig::dimensionless(1.5).unwrap());
        assert!(close(k.k_plus.re, 1.0, 1e-15) && k.k_plus.im == 0.0);
        assert!(close(k.k_minus.re, 5f64.sqrt(), 1e-15) && k.k_minus.im == 0.0);

        let k = wavenumbers(&PhysicalConfig::dimensionless(1.0).unwrap());
        assert_eq!(k.k_plus, Complex64::new(0.0, 0.0));

        let k = wavenumbers(&PhysicalConfig::dimensionless(-2.0).unwrap());
        assert_eq!(k.k_plus.re, 0.0);
        assert!(close(k.k_plus.im, 6f64.sqrt(), 1e-15));
        assert_eq!(k.k_minus.re, 0.0);
        assert!(close(k.k_minus.im, 2f64.sqrt(), 1e-15));
    }

    #[test]
    fn principal_sqrt_branch() {
        assert_eq!(principal_sqrt(Complex64::new(-4.0, 0.0)), Complex64::new(0.0, 2.0));
        assert_eq!(principal_sqrt(Complex64::new(-4.0, -0.0)), Complex64::new(0.0, 2.0));
        assert_eq!(principal_sqrt(Complex64::new(9.0, 0.0)), Complex64::new(3.0, 0.0));
        // tiny imaginary part next to a negative real part keeps full relative accuracy
        let s = principal_sqrt(Complex64::new(-4.0, 1e-12));
        assert!(close(s.re, 1e-12 / 4.0, 1e-15));
        assert!(close(s.im, 2.0, 1e-15));
        let s = principal_sqrt(Complex64::new(-4.0, -1.0));
        assert!(s.im < 0.0);
    }

    #[test]
    fn resonance_mass() {
        assert_eq!(mass_from_resonance(1.0, 1.0).unwrap(), 1.0);
        assert_eq!(mass_from_resonance(4.0, 2.0).unwrap(), 1.0);
        assert_eq!(mass_from_resonance(9.0, 3.0).unwrap(), 1.0);
        assert!(mass_from_resonance(0.0, 1.0).is_err());
        assert!(mass_from_resonance(1.0, -1.0).is_err());
    }

    #[test]
    fn config_validation() {
        let one = Complex64::new(1.0, 0.0);
        assert!(PhysicalConfig::new(0.0, 1.0, 1.0, 0.0, 0.0, one).is_err());
        assert!(PhysicalConfig::new(1.0, -1.0, 1.0, 0.0, 0.0, one).is_err());
        assert!(PhysicalConfig::new(1.0, 1.0, -1.0, 0.0, 0.0, one).is_err());
        assert!(PhysicalConfig::new(1.0, 1.0, 1.0, 0.0, 0.0, Complex64::new(0.0, 0.0)).is_err());
        assert!(PhysicalConfig::new(1.0, 1.0, 1.0, 0.0, f64::NAN, one).is_err());
        let c = PhysicalConfig::new(1.0, 2.0, 3.0, 0.5, 0.25, one).unwrap();
        assert_eq!(c.delta(), 0.25 - 0.5 + 3.0);
        assert_eq!(c.with_delta(-7.0).unwrap().delta(), -7.0);
    }

    proptest! {
        #[test]
        fn regime_matches_wavenumber_pattern(delta in -50.0f64..50.0, hj in 0.01f64..5.0, mass in 0.1f64..10.0) {
            let c = PhysicalConfig::new(1.0, mass, hj, 0.0, 0.0, Complex64::new(1.0, 0.0))
                .unwrap().with_delta(delta).unwrap();
            let k = wavenumbers(&c);
            prop_assert!(k.k_plus.im >= 0.0 && k.k_minus.im >= 0.0);
            prop_assert!(k.k_plus.re == 0.0 || k.k_plus.im == 0.0);
            prop_assert!(k.k_minus.re == 0.0 || k.k_minus.im == 0.0);
            match c.regime() {
                Regime::TwoTransmission => prop_assert!(k.k_plus.im == 0.0 && k.k_minus.im == 0.0),
                Regime::MixedTransmissionEvanescent => prop_assert!(k.k_plus.re == 0.0 && k.k_minus.im == 0.0),
                Regime::TwoEvanescent => prop_assert!(k.k_plus.re == 0.0 && k.k_minus.re == 0.0),
            }
        }

        #[test]
        fn wavenumbers_square_to_radicands(delta in -50.0f64..50.0, hj in 0.01f64..5.0, mass in 0.1f64..10.0, hbar in 0.1f64..3.0) {
            let c = PhysicalConfig::new(hbar, mass, hj / hbar, 0.0, 0.0, Complex64::new(1.0, 0.0))
                .unwrap().with_delta(delta).unwrap();
            let k = wavenumbers(&c);
            let s = 2.0 * mass / (hbar * hbar);
            let (rp, rm) = (s * (delta - hj), s * (delta + hj));
            let tol = 1e-13 * rp.abs().max(rm.abs()).max(1.0);
            prop_assert!((k.k_plus * k.k_plus - rp).norm() <= tol);
            prop_assert!((k.k_minus * k.k_minus - rm).norm() <= tol);
            // k_-^2 - k_+^2 = 4 m J0 / hbar
            let gap = (k.k_minus * k.k_minus - k.k_plus * k.k_plus).re;
            let expect = 4.0 * mass * c.coupling() / hbar;
            prop_assert!((gap - expect).abs() <= 1e-12 * expect.max(rp.abs()).max(rm.abs()));
        }
    }
}
