//! Reference values computed only through oracle routes, written as a
//! key/value text file that the test suite checks the implementation
//! against.
//!
//! One record per line, space-separated `key=value` pairs:
//!
//! ```text
//! quantity=bohm_velocity hbar=... mass=... coupling=... step_potential=... energy=...
//!     amplitude_re=... amplitude_im=... x=... waveguide=main value=... tolerance=...
//! ```
//!
//! `x` and `waveguide` are present only for point-wise quantities, and
//! `tolerance` is absolute. Lines starting with `#` are comments.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;

use super::{numeric_flux_divergence, numeric_quadratic_coefficient, numeric_quantum_potential};
use super::{numeric_trajectory_end, numeric_velocity};
use crate::bohmian::Waveguide;
use crate::error::{Error, Result};
use crate::model::PhysicalConfig;

/// Detunings (units of `hbar J0`) at which the quadratic coefficient is tabulated.
pub const COEFFICIENT_DELTAS: [f64; 10] = [-10.0, -5.0, -2.0, -1.001, -0.5, 0.0, 0.5, 1.001, 2.0, 10.0];

#[derive(Clone, Debug, PartialEq)]
pub struct Fixture {
    pub quantity: String,
    pub config: PhysicalConfig,
    pub x: Option<f64>,
    pub waveguide: Option<Waveguide>,
    pub value: f64,
    pub tolerance: f64,
}

impl Fixture {
    fn new(quantity: &str, config: PhysicalConfig, value: f64, tolerance: f64) -> Self {
        Self { quantity: quantity.to_owned(), config, x: None, waveguide: None, value, tolerance }
    }

    fn at(mut self, x: f64) -> Self {
        self.x = Some(x);
        self
    }

    fn on(mut self, waveguide: Waveguide) -> Self {
        self.waveguide = Some(waveguide);
        self
    }

    fn render(&self) -> String {
        let c = &self.config;
        let mut line = format!("quantity={}", self.quantity);
        let fields = [
            ("hbar", c.hbar()),
            ("mass", c.mass()),
            ("coupling", c.coupling()),
            ("step_potential", c.step_potential()),
            ("energy", c.energy()),
            ("amplitude_re", c.amplitude().re),
            ("amplitude_im", c.amplitude().im),
        ];
        for (k, v) in fields {
            write!(line, " {k}={v:.16e}").unwrap();
        }
        if let Some(x) = self.x {
            write!(line, " x={x:.16e}").unwrap();
        }
        if let Some(wg) = self.waveguide {
            write!(line, " waveguide={wg}").unwrap();
        }
        write!(line, " value={:.16e} tolerance={:.3e}", self.value, self.tolerance).unwrap();
        line
    }

    fn parse(line: &str) -> Result<Self> {
        let mut quantity = None;
        let mut num = std::collections::HashMap::new();
        let mut waveguide = None;
        for pair in line.split_whitespace() {
            let (k, v) =
                pair.split_once('=').ok_or_else(|| Error::Config(format!("malformed fixture field `{pair}`")))?;
            match k {
                "quantity" => quantity = Some(v.to_owned()),
                "waveguide" => waveguide = Some(v.parse()?),
                _ => {
                    let value: f64 = v.parse().map_err(|_| Error::Config(format!("bad number `{v}` for `{k}`")))?;
                    num.insert(k.to_owned(), value);
                }
            }
        }
        let get = |k: &str| num.get(k).copied().ok_or_else(|| Error::Config(format!("fixture is missing `{k}`")));
        let config = PhysicalConfig::new(
            get("hbar")?,
            get("mass")?,
            get("coupling")?,
            get("step_potential")?,
            get("energy")?,
            Complex64::new(get("amplitude_re")?, get("amplitude_im")?),
        )?;
        Ok(Self {
            quantity: quantity.ok_or_else(|| Error::Config("fixture is missing `quantity`".into()))?,
            config,
            x: num.get("x").copied(),
            waveguide,
            value: get("value")?,
            tolerance: get("tolerance")?,
        })
    }
}

fn dimless(delta: f64) -> PhysicalConfig {
    PhysicalConfig::dimensionless(delta).expect("finite detuning")
}

/// All oracle-derived reference values, in a fixed order.
pub fn derived_fixtures() -> Result<Vec<Fixture>> {
    let mut out = Vec::new();

    // wavenumbers by hand: sqrt(2 (delta -+ 1))
    let c = dimless(1.5);
    out.push(Fixture::new("k_plus.re", c, 1.0, 1e-15));
    out.push(Fixture::new("k_minus.re", c, 5f64.sqrt(), 1e-15));
    let c = dimless(-2.0);
    out.push(Fixture::new("k_plus.im", c, 6f64.sqrt(), 1e-15));
    out.push(Fixture::new("k_minus.im", c, 2f64.sqrt(), 1e-15));

    let (a, b) = ((-6f64.sqrt()).exp(), (-2f64.sqrt()).exp());
    out.push(Fixture::new("psi_m.re", c, 0.5 * (a + b), 1e-15).at(1.0));
    out.push(Fixture::new("psi_a.re", c, 0.5 * (a - b), 1e-15).at(1.0));

    // full beat transfer at (k- - k+) x = pi
    let c = dimless(2.0);
    let beat = PI / (6f64.sqrt() - 2f64.sqrt());
    out.push(Fixture::new("rho_a_norm", c, 1.0, 1e-13).at(beat));

    for delta in COEFFICIENT_DELTAS {
        let c = dimless(delta);
        let value = numeric_quadratic_coefficient(&c)?;
        out.push(Fixture::new("rho_a_coefficient", c, value, 2e-6 * value));
    }
    let c = dimless(-5.0);
    let v = c.coupling() / numeric_quadratic_coefficient(&c)?.sqrt();
    out.push(Fixture::new("semiclassical_speed", c, v, 2e-6 * v));

    for (delta, x) in [(0.0, 1.0), (1.5, 0.7), (-0.5, 3.0), (-2.0, 2.0)] {
        let c = dimless(delta);
        for wg in Waveguide::BOTH {
            out.push(Fixture::new("bohm_velocity", c, numeric_velocity(&c, x, wg), 1e-9).at(x).on(wg));
        }
    }

    // antinode of |psi_m| at (k- - k+) x = 2 pi
    let c = dimless(2.0);
    let x = 2.0 * beat;
    let q = numeric_quantum_potential(&c, x, Waveguide::Main);
    out.push(Fixture::new("quantum_potential", c, q, 1e-6 * q.abs()).at(x).on(Waveguide::Main));
    let c = dimless(-2.0);
    let x = 10.0 / 2f64.sqrt();
    let q = numeric_quantum_potential(&c, x, Waveguide::Main);
    out.push(Fixture::new("quantum_potential", c, q, 1e-6 * q.abs()).at(x).on(Waveguide::Main));
    let q = numeric_quantum_potential(&c, 1.0, Waveguide::Main);
    out.push(Fixture::new("quantum_potential", c, q, 1e-6 * q.abs()).at(1.0).on(Waveguide::Main));

    // j0 = -d/dx (rho_a v_a)
    let c = dimless(1.5);
    let j = -numeric_flux_divergence(&c, 0.3, Waveguide::Auxiliary);
    out.push(Fixture::new("tunnelling_current", c, j, 1e-8).at(0.3));

    let c = dimless(0.0);
    for wg in Waveguide::BOTH {
        let end = numeric_trajectory_end(&c, 0.5, wg, 1.0, 1e-3);
        out.push(Fixture::new("trajectory_end", c, end, 1e-8).at(0.5).on(wg));
    }

    Ok(out)
}

pub fn render(fixtures: &[Fixture]) -> String {
    let mut s = String::from("# oracle-derived reference values; regenerate with `bohm-tunnel fixtures`\n");
    for f in fixtures {
        s.push_str(&f.render());
        s.push('\n');
    }
    s
}

pub fn parse(text: &str) -> Result<Vec<Fixture>> {
    text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')).map(Fixture::parse).collect()
}

pub fn write_fixtures(path: &Path) -> Result<()> {
    let text = render(&derived_fixtures()?);
    std::fs::write(path, text).map_err(|source| Error::Io { path: path.to_owned(), source })
}

pub fn read_fixtures(path: &Path) -> Result<Vec<Fixture>> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_owned(), source })?;
    parse(&text)
}
