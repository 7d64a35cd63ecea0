//! Bohmian description of the coupled waveguides.
//!
//! Each field is written in polar form `psi = R exp(iS)`. The real part of
//! the stationary equations gives a Hamilton-Jacobi balance per waveguide
//!
//! ```text
//! E = (hbar S')^2 / 2m - (hbar^2 / 2m) R'' / R + V0 + hbar J0 (R_j / R_i cos(S_j - S_i) - 1)
//! ```
//!
//! and the imaginary part a continuity equation with an extra tunnelling
//! current `j0 = 2 J0 R_m R_a sin(S_a - S_m)` exchanging density between the
//! guides.
//!
//! All derivatives of `R` and `S` are analytic. They are written through
//! the log-derivative of the two-mode superposition,
//!
//! ```text
//! psi' / psi  = i (kbar + (k+ - k-) q / 2)
//! psi'' / psi = -P + (Gamma / 2) q
//! ```
//!
//! where `q` is the ratio of the other field to this one, `P = 2 m delta /
//! hbar^2` and `Gamma = 4 m J0 / hbar`. This form has no cancellation
//! between large terms close to nodes, so velocities that are constant (or
//! zero) come out exactly constant (or zero).

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::closed_form::{eval_fields, modes, Modes};
use crate::error::{domain, Error, Result};
use crate::model::{wavenumbers_at, PhysicalConfig};

/// A field is at a node when `R < NODE_THRESHOLD * envelope(x)`, where the
/// envelope is the largest modulus the two-mode superposition can reach.
pub const NODE_THRESHOLD: f64 = 1e-10;

/// Default continuation parameter in units of `hbar J0`.
pub const DEFAULT_EPSILON: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", try_from = "String")]
pub enum Waveguide {
    Main,
    Auxiliary,
}

impl Waveguide {
    pub const BOTH: [Waveguide; 2] = [Waveguide::Main, Waveguide::Auxiliary];

    fn is_main(self) -> bool {
        matches!(self, Waveguide::Main)
    }

    /// +1 for the main guide, -1 for the auxiliary guide: the relative sign
    /// of the `k-` mode in the field.
    fn mode_sign(self) -> f64 {
        if self.is_main() {
            1.0
        } else {
            -1.0
        }
    }
}

impl fmt::Display for Waveguide {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Waveguide::Main => "main",
            Waveguide::Auxiliary => "auxiliary",
        })
    }
}

impl std::str::FromStr for Waveguide {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "main" | "m" => Ok(Waveguide::Main),
            "auxiliary" | "aux" | "a" => Ok(Waveguide::Auxiliary),
            other => Err(Error::Config(format!("unknown waveguide `{other}`"))),
        }
    }
}

impl TryFrom<String> for Waveguide {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// Madelung amplitudes and unwrapped phases of both guides at one point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PolarField {
    pub x: f64,
    pub r_m: f64,
    pub s_m: f64,
    pub r_a: f64,
    pub s_a: f64,
    /// The main phase was interpolated because `r_m` is below the node threshold.
    pub node_m: bool,
    pub node_a: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EnergyBudget {
    pub kinetic: f64,
    pub quantum_potential: f64,
    pub external: f64,
    pub coupling: f64,
    pub total: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Trajectory {
    pub waveguide: Waveguide,
    pub times: Vec<f64>,
    pub positions: Vec<f64>,
    /// Integration stopped early at a node, in the underflowed tail or at
    /// the step (x < 0).
    pub truncated: bool,
}

/// Per-point quantities shared by the velocity, quantum potential and
/// coupling energy of one guide.
struct LogDerivative {
    /// S' = Im(psi' / psi)
    phase_gradient: f64,
    /// Re(psi_j / psi_i)
    ratio_re: f64,
}

fn resolve(md: &Modes, waveguide: Waveguide, x: f64) -> Result<f64> {
    let envelope = md.unit_envelope();
    if envelope == 0.0 || !envelope.is_finite() {
        return Err(Error::TailUnderflow { x });
    }
    let u = md.unit(waveguide.is_main());
    if u.norm() < NODE_THRESHOLD * envelope {
        return Err(Error::Node { x, waveguide });
    }
    // |e+ + s e-|^2
    Ok(4.0 * u.norm_sqr())
}

fn log_derivative(config: &PhysicalConfig, x: f64, waveguide: Waveguide) -> Result<(Modes, LogDerivative)> {
    let md = modes(config, x)?;
    let denom = resolve(&md, waveguide, x)?;
    let s = waveguide.mode_sign();
    let (kp, km) = (md.k.k_plus, md.k.k_minus);
    let mod2_gap = md.mod2_plus - md.mod2_minus;
    let remainder = 0.5 * (kp.re - km.re) * mod2_gap + s * (kp.im - km.im) * md.cross.im;
    let phase_gradient = 0.5 * (kp.re + km.re) + remainder / denom;
    Ok((md, LogDerivative { phase_gradient, ratio_re: mod2_gap / denom }))
}

/// Guiding-equation velocity `(hbar / m) Im(psi* psi') / |psi|^2`.
pub fn bohm_velocity(config: &PhysicalConfig, x: f64, waveguide: Waveguide) -> Result<f64> {
    let (_, ld) = log_derivative(config, x, waveguide)?;
    Ok(config.hbar() / config.mass() * ld.phase_gradient)
}

/// `-(hbar^2 / 2m) R'' / R`.
pub fn quantum_potential(config: &PhysicalConfig, x: f64, waveguide: Waveguide) -> Result<f64> {
    let (_, ld) = log_derivative(config, x, waveguide)?;
    Ok(quantum_potential_from(config, &ld))
}

fn quantum_potential_from(config: &PhysicalConfig, ld: &LogDerivative) -> f64 {
    let (hbar, m) = (config.hbar(), config.mass());
    let p = 2.0 * m * config.delta() / (hbar * hbar);
    let gamma = 4.0 * m * config.coupling() / hbar;
    // R''/R = Re(psi''/psi) + S'^2
    let r_curvature = -p + 0.5 * gamma * ld.ratio_re + ld.phase_gradient * ld.phase_gradient;
    -hbar * hbar / (2.0 * m) * r_curvature
}

/// `hbar J0 (R_j / R_i cos(S_j - S_i) - 1)` for guide `i`.
pub fn coupling_energy(config: &PhysicalConfig, x: f64, waveguide: Waveguide) -> Result<f64> {
    let (_, ld) = log_derivative(config, x, waveguide)?;
    Ok(config.coupling_energy() * (ld.ratio_re - 1.0))
}

/// All terms of the Hamilton-Jacobi balance for one guide.
pub fn energy_budget(config: &PhysicalConfig, x: f64, waveguide: Waveguide) -> Result<EnergyBudget> {
    let (_, ld) = log_derivative(config, x, waveguide)?;
    let hbar_grad = config.hbar() * ld.phase_gradient;
    let kinetic = hbar_grad * hbar_grad / (2.0 * config.mass());
    let quantum_potential = quantum_potential_from(config, &ld);
    let external = config.step_potential();
    let coupling = config.coupling_energy() * (ld.ratio_re - 1.0);
    Ok(EnergyBudget {
        kinetic,
        quantum_potential,
        external,
        coupling,
        total: kinetic + quantum_potential + external + coupling,
    })
}

/// `E - (kinetic + quantum potential + V0 + coupling)`. The stationary
/// total energy `-hbar dS/dt` is `E` for the time factor `exp(-iEt/hbar)`.
pub fn hj_residual(config: &PhysicalConfig, x: f64, waveguide: Waveguide) -> Result<f64> {
    Ok(config.energy() - energy_budget(config, x, waveguide)?.total)
}

/// Tunnelling current `j0 = -i J0 (psi_a psi_m* - psi_a* psi_m)`, equal to
/// `2 J0 R_m R_a sin(S_a - S_m)` but free of node singularities.
pub fn tunnelling_current(config: &PhysicalConfig, x: f64) -> Result<f64> {
    let f = eval_fields(config, x)?;
    let z = f.psi_a * f.psi_m.conj();
    let j = -Complex64::i() * config.coupling() * (z - z.conj());
    debug_assert!(j.im.abs() <= 1e-14 * j.re.abs().max(f64::MIN_POSITIVE));
    Ok(j.re)
}

/// Probability current `R^2 v = (hbar / m) Im(psi* psi')` of one guide.
pub fn probability_flux(config: &PhysicalConfig, x: f64, waveguide: Waveguide) -> Result<f64> {
    let f = eval_fields(config, x)?;
    let (psi, dpsi) = match waveguide {
        Waveguide::Main => (f.psi_m, f.dpsi_m_dx),
        Waveguide::Auxiliary => (f.psi_a, f.dpsi_a_dx),
    };
    Ok(config.hbar() / config.mass() * (psi.conj() * dpsi).im)
}

/// `d/dx (R^2 v) = (hbar / m) Im(psi* psi'')`.
pub fn flux_divergence(config: &PhysicalConfig, x: f64, waveguide: Waveguide) -> Result<f64> {
    let f = eval_fields(config, x)?;
    let (psi, d2psi) = match waveguide {
        Waveguide::Main => (f.psi_m, f.d2psi_m_dx2),
        Waveguide::Auxiliary => (f.psi_a, f.d2psi_a_dx2),
    };
    Ok(config.hbar() / config.mass() * (psi.conj() * d2psi).im)
}

/// Stationary continuity residual: `d/dx(R_a^2 v_a) + j0` for the
/// auxiliary guide and `d/dx(R_m^2 v_m) - j0` for the main guide.
pub fn continuity_residual(config: &PhysicalConfig, x: f64, waveguide: Waveguide) -> Result<f64> {
    let div = flux_divergence(config, x, waveguide)?;
    let j0 = tunnelling_current(config, x)?;
    Ok(match waveguide {
        Waveguide::Main => div - j0,
        Waveguide::Auxiliary => div + j0,
    })
}

/// Quadratic coefficient of the auxiliary population reconstructed from the
/// reduced continuity equation `d/dx(rho_a v_a) + j0 = 0`,
///
/// ```text
/// C_B = (m J0 / hbar) (Re k- - Re k+) / (Re k- + Re k+)
/// ```
///
/// For `delta <= -hbar J0` both real parts vanish and the wavenumbers are
/// evaluated at `delta + i epsilon`; otherwise the formula is finite at real
/// `delta` and `epsilon` is not used.
pub fn rho_ab_coefficient(config: &PhysicalConfig, epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return domain(format!("continuation parameter must be positive, got {epsilon}"));
    }
    let delta = config.delta();
    let shift = if delta > -config.coupling_energy() { 0.0 } else { epsilon };
    let k = wavenumbers_at(config, Complex64::new(delta, shift));
    let (a, b) = (k.k_plus.re, k.k_minus.re);
    Ok(config.mass() * config.coupling() / config.hbar() * (b - a) / (b + a))
}

/// `(epsilon, C_B(epsilon))` for each continuation parameter.
pub fn continuation_sweep(config: &PhysicalConfig, epsilons: &[f64]) -> Result<Vec<(f64, f64)>> {
    epsilons.iter().map(|&e| Ok((e, rho_ab_coefficient(config, e)?))).collect()
}

/// Madelung decomposition along an ascending grid. Phases are unwrapped by
/// continuity; at nodes the phase is interpolated from the neighbouring
/// resolved samples and the sample is flagged.
pub fn polar_decompose(config: &PhysicalConfig, x_grid: &[f64]) -> Result<Vec<PolarField>> {
    if x_grid.len() < 2 {
        return domain(format!("polar decomposition needs at least 2 grid points, got {}", x_grid.len()));
    }
    if x_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return domain("grid must be strictly ascending");
    }
    let mut r = [Vec::with_capacity(x_grid.len()), Vec::with_capacity(x_grid.len())];
    let mut arg = [Vec::with_capacity(x_grid.len()), Vec::with_capacity(x_grid.len())];
    let mut node = [Vec::with_capacity(x_grid.len()), Vec::with_capacity(x_grid.len())];
    for &x in x_grid {
        let md = modes(config, x)?;
        let envelope = md.unit_envelope();
        for (g, wg) in Waveguide::BOTH.into_iter().enumerate() {
            let u = md.unit(wg.is_main());
            let psi = config.amplitude() * u;
            r[g].push(psi.norm());
            node[g].push(!(u.norm() >= NODE_THRESHOLD * envelope) || envelope == 0.0);
            arg[g].push(psi.arg());
        }
    }
    let phase: Vec<Vec<f64>> = (0..2).map(|g| unwrap_phase(x_grid, &arg[g], &node[g])).collect();
    Ok((0..x_grid.len())
        .map(|i| PolarField {
            x: x_grid[i],
            r_m: r[0][i],
            s_m: phase[0][i],
            r_a: r[1][i],
            s_a: phase[1][i],
            node_m: node[0][i],
            node_a: node[1][i],
        })
        .collect())
}

fn wrap(d: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let w = d - TAU * (d / TAU).round();
    if w <= -PI {
        w + TAU
    } else {
        w
    }
}

fn unwrap_phase(x: &[f64], arg: &[f64], node: &[bool]) -> Vec<f64> {
    use std::f64::consts::PI;
    let n = x.len();
    let mut out = vec![f64::NAN; n];
    let mut last: Option<(f64, f64)> = None; // (raw, unwrapped)
    for i in 0..n {
        if node[i] {
            continue;
        }
        let unwrapped = match last {
            None => {
                // arg of a negative real with imaginary part -0.0 is -pi
                if arg[i] == -PI {
                    PI
                } else {
                    arg[i]
                }
            }
            Some((raw, prev)) => prev + wrap(arg[i] - raw),
        };
        out[i] = unwrapped;
        last = Some((arg[i], unwrapped));
    }
    let resolved: Vec<usize> = (0..n).filter(|&i| !node[i]).collect();
    if resolved.is_empty() {
        return vec![0.0; n];
    }
    for i in 0..n {
        if !node[i] {
            continue;
        }
        let right = resolved.partition_point(|&j| j < i);
        out[i] = match (right.checked_sub(1).map(|l| resolved[l]), resolved.get(right)) {
            (Some(l), Some(&r)) => {
                let t = (x[i] - x[l]) / (x[r] - x[l]);
                out[l] + t * (out[r] - out[l])
            }
            (Some(l), None) => out[l],
            (None, Some(&r)) => out[r],
            (None, None) => unreachable!(),
        };
    }
    out
}

/// Integrate `dx/dt = v(x)` with the classic fourth-order Runge-Kutta
/// scheme. The run stops early (and is flagged truncated) if a stage lands
/// on a node, in the underflowed tail or behind the step.
pub fn integrate_trajectory(
    config: &PhysicalConfig,
    x0: f64,
    waveguide: Waveguide,
    t_end: f64,
    dt: f64,
) -> Result<Trajectory> {
    if !(x0 > 0.0) || !x0.is_finite() {
        return domain(format!("start position must be positive, got {x0}"));
    }
    if !(dt > 0.0) || !dt.is_finite() {
        return domain(format!("time step must be positive, got {dt}"));
    }
    if !(t_end >= 0.0) || !t_end.is_finite() {
        return domain(format!("end time must be non-negative, got {t_end}"));
    }
    let v = |x: f64| bohm_velocity(config, x, waveguide);
    if let Err(e) = v(x0) {
        return domain(format!("cannot start a trajectory at x = {x0}: {e}"));
    }

    let steps = (t_end / dt * (1.0 - 1e-12)).ceil() as usize;
    let mut times = Vec::with_capacity(steps + 1);
    let mut positions = Vec::with_capacity(steps + 1);
    times.push(0.0);
    positions.push(x0);
    let mut x = x0;
    let mut truncated = false;
    for n in 1..=steps {
        let t_prev = (n - 1) as f64 * dt;
        let t = if n == steps { t_end } else { n as f64 * dt };
        let h = t - t_prev;
        let step = (|| -> Result<f64> {
            let k1 = v(x)?;
            let k2 = v(x + 0.5 * h * k1)?;
            let k3 = v(x + 0.5 * h * k2)?;
            let k4 = v(x + h * k3)?;
            Ok(x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4))
        })();
        match step {
            Ok(next) if next.is_finite() => {
                x = next;
                times.push(t);
                positions.push(x);
            }
            _ => {
                truncated = true;
                break;
            }
        }
    }
    Ok(Trajectory { waveguide, times, positions, truncated })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closed_form::rho_a_coefficient;
    use crate::model::wavenumbers;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn dimless(delta: f64) -> PhysicalConfig {
        PhysicalConfig::dimensionless(delta).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / a.abs().max(b.abs())
    }

    /// Direct Im(psi* psi') / |psi|^2 from the analytic fields.
    fn naive_velocity(c: &PhysicalConfig, x: f64, wg: Waveguide) -> f64 {
        let f = eval_fields(c, x).unwrap();
        let (p, d) = match wg {
            Waveguide::Main => (f.psi_m, f.dpsi_m_dx),
            Waveguide::Auxiliary => (f.psi_a, f.dpsi_a_dx),
        };
        c.hbar() / c.mass() * (p.conj() * d).im / p.norm_sqr()
    }

    /// R''/R through rho = |psi|^2: (2 rho rho'' - rho'^2) / (4 rho^2).
    fn naive_quantum_potential(c: &PhysicalConfig, x: f64, wg: Waveguide) -> f64 {
        let f = eval_fields(c, x).unwrap();
        let (p, d, dd) = match wg {
            Waveguide::Main => (f.psi_m, f.dpsi_m_dx, f.d2psi_m_dx2),
            Waveguide::Auxiliary => (f.psi_a, f.dpsi_a_dx, f.d2psi_a_dx2),
        };
        let rho = p.norm_sqr();
        let drho = 2.0 * (p.conj() * d).re;
        let ddrho = 2.0 * (p.conj() * dd).re + 2.0 * d.norm_sqr();
        let curvature = (2.0 * rho * ddrho - drho * drho) / (4.0 * rho * rho);
        -c.hbar() * c.hbar() / (2.0 * c.mass()) * curvature
    }

    #[test]
    fn evanescent_phases() {
        let grid: Vec<f64> = (0..50).map(|i| i as f64 * 0.1).collect();
        let polar = polar_decompose(&dimless(-3.0), &grid).unwrap();
        assert!(polar[0].node_a && !polar[0].node_m);
        assert_eq!(polar[0].r_a, 0.0);
        for p in &polar {
            assert_eq!(p.s_m, 0.0);
            assert_eq!(p.s_a, PI);
        }
    }

    #[test]
    fn transmission_phase_is_mean_wavenumber() {
        let c = dimless(1.5);
        let k = wavenumbers(&c);
        let first_node = PI / (k.k_minus.re - k.k_plus.re);
        let grid: Vec<f64> = (0..100).map(|i| i as f64 * 0.99 * first_node / 100.0).collect();
        for p in polar_decompose(&c, &grid).unwrap() {
            assert!((p.s_m - 0.5 * (k.k_plus.re + k.k_minus.re) * p.x).abs() < 1e-12);
            let psi = eval_fields(&c, p.x).unwrap().psi_m;
            assert!((Complex64::from_polar(p.r_m, p.s_m) - psi).norm() <= 1e-12 * psi.norm());
        }
    }

    #[test]
    fn polar_form_reproduces_fields_and_unwraps() {
        let c = dimless(0.4).with_amplitude(Complex64::new(-0.3, 0.7)).unwrap();
        let grid: Vec<f64> = (0..400).map(|i| i as f64 * 0.05).collect();
        let polar = polar_decompose(&c, &grid).unwrap();
        for w in polar.windows(2) {
            assert!((w[1].s_m - w[0].s_m).abs() < PI);
            assert!((w[1].s_a - w[0].s_a).abs() < PI);
        }
        for p in &polar {
            let f = eval_fields(&c, p.x).unwrap();
            if !p.node_m {
                assert!((Complex64::from_polar(p.r_m, p.s_m) - f.psi_m).norm() <= 1e-12 * f.psi_m.norm());
            }
            if !p.node_a {
                assert!((Complex64::from_polar(p.r_a, p.s_a) - f.psi_a).norm() <= 1e-12 * f.psi_a.norm());
            }
        }
    }

    #[test]
    fn polar_rejects_short_or_unsorted_grids() {
        let c = dimless(0.0);
        assert!(polar_decompose(&c, &[1.0]).is_err());
        assert!(polar_decompose(&c, &[1.0, 0.5]).is_err());
        assert!(polar_decompose(&c, &[-1.0, 0.5]).is_err());
    }

    #[test]
    fn node_phase_interpolated_between_neighbours() {
        // psi_m in the two-transmission regime vanishes at x = pi / (k- - k+)
        let c = dimless(2.0);
        let k = wavenumbers(&c);
        let node = PI / (k.k_minus.re - k.k_plus.re);
        let grid = [node - 0.1, node, node + 0.1];
        let polar = polar_decompose(&c, &grid).unwrap();
        assert!(polar[1].node_m);
        assert!((polar[1].s_m - 0.5 * (polar[0].s_m + polar[2].s_m)).abs() < 1e-12);
    }

    #[test]
    fn velocity_regime_laws() {
        for x in [0.3, 5.0, 10.0, 20.0, 40.0] {
            for wg in Waveguide::BOTH {
                assert_eq!(bohm_velocity(&dimless(-2.0), x, wg).unwrap(), 0.0);
            }
            let c = dimless(1.5);
            let expect = 0.5 * (1.0 + 5f64.sqrt());
            assert_eq!(bohm_velocity(&c, x, Waveguide::Main).unwrap(), expect);
            assert_eq!(bohm_velocity(&c, x, Waveguide::Auxiliary).unwrap(), expect);
        }
        let c = dimless(0.0);
        let vm = bohm_velocity(&c, 1.0, Waveguide::Main).unwrap();
        let va = bohm_velocity(&c, 1.0, Waveguide::Auxiliary).unwrap();
        assert!((vm - va).abs() > 0.1);
    }

    #[test]
    fn velocity_matches_direct_formula_away_from_nodes() {
        for delta in [-4.0, -1.2, -0.7, 0.0, 0.6, 1.3, 6.0] {
            let c = dimless(delta).with_amplitude(Complex64::new(0.5, -2.0)).unwrap();
            for i in 1..60 {
                let x = 0.173 * i as f64;
                for wg in Waveguide::BOTH {
                    let (a, b) = (bohm_velocity(&c, x, wg).unwrap(), naive_velocity(&c, x, wg));
                    assert!((a - b).abs() <= 1e-10 * (1.0 + a.abs()), "delta={delta} x={x} {a} {b}");
                    let (a, b) = (quantum_potential(&c, x, wg).unwrap(), naive_quantum_potential(&c, x, wg));
                    assert!((a - b).abs() <= 1e-8 * (1.0 + a.abs()), "delta={delta} x={x} {a} {b}");
                }
            }
        }
    }

    #[test]
    fn nodes_are_refused() {
        let c = dimless(0.0);
        assert!(matches!(bohm_velocity(&c, 0.0, Waveguide::Auxiliary), Err(Error::Node { .. })));
        assert!(quantum_potential(&c, 0.0, Waveguide::Auxiliary).is_err());
        assert!(coupling_energy(&c, 0.0, Waveguide::Auxiliary).is_err());
        assert!(hj_residual(&c, 0.0, Waveguide::Auxiliary).is_err());
        assert!(matches!(bohm_velocity(&dimless(-50.0), 1e4, Waveguide::Main), Err(Error::TailUnderflow { .. })));
    }

    #[test]
    fn coupling_energy_examples() {
        for delta in [-3.0, 0.0, 2.0] {
            let e = coupling_energy(&dimless(delta), 0.0, Waveguide::Main).unwrap();
            assert_eq!(e, -1.0);
        }
        let c = dimless(-2.0);
        let p = polar_decompose(&c, &[1.0, 1.1]).unwrap()[0];
        let e = coupling_energy(&c, 1.0, Waveguide::Main).unwrap();
        assert!(rel(e, -(p.r_a / p.r_m + 1.0)) < 1e-14);
        let free = dimless(0.5).with_coupling(0.0).unwrap();
        assert_eq!(coupling_energy(&free, 0.7, Waveguide::Main).unwrap(), 0.0);
    }

    #[test]
    fn decoupled_plane_wave() {
        let c = PhysicalConfig::new(1.0, 1.0, 0.0, 0.25, 2.0, Complex64::new(1.0, 0.0)).unwrap();
        for x in [0.1, 1.0, 3.0] {
            let b = energy_budget(&c, x, Waveguide::Main).unwrap();
            assert!((b.kinetic - (2.0 - 0.25)).abs() < 1e-14);
            assert!(b.quantum_potential.abs() < 1e-14);
            assert_eq!(b.coupling, 0.0);
            assert!(hj_residual(&c, x, Waveguide::Main).unwrap().abs() < 1e-14);
        }
    }

    #[test]
    fn evanescent_energy_balance_without_kinetic_term() {
        let c = dimless(-2.0);
        let b = energy_budget(&c, 1.0, Waveguide::Main).unwrap();
        assert_eq!(b.kinetic, 0.0);
        assert!((b.quantum_potential + b.external + b.coupling - c.energy()).abs() < 1e-13);
    }

    #[test]
    fn current_examples() {
        for delta in [-3.0, 0.0, 2.0] {
            assert_eq!(tunnelling_current(&dimless(delta), 0.0).unwrap(), 0.0);
        }
        for i in 0..20 {
            assert_eq!(tunnelling_current(&dimless(-2.0), 0.5 * i as f64).unwrap(), 0.0);
        }
        let c = dimless(-2.0);
        for wg in Waveguide::BOTH {
            assert_eq!(flux_divergence(&c, 1.3, wg).unwrap(), 0.0);
            assert_eq!(continuity_residual(&c, 1.3, wg).unwrap(), 0.0);
        }
    }

    #[test]
    fn total_flux_sum_rule() {
        let c = dimless(1.7);
        let total = |x| {
            probability_flux(&c, x, Waveguide::Main).unwrap() + probability_flux(&c, x, Waveguide::Auxiliary).unwrap()
        };
        let reference = total(0.0);
        for i in 0..200 {
            let x = i as f64 * 0.05;
            assert!((total(x) - reference).abs() < 1e-13);
            let sum = continuity_residual(&c, x, Waveguide::Main).unwrap()
                + continuity_residual(&c, x, Waveguide::Auxiliary).unwrap();
            let div = flux_divergence(&c, x, Waveguide::Main).unwrap()
                + flux_divergence(&c, x, Waveguide::Auxiliary).unwrap();
            assert!((sum - div).abs() < 1e-14);
        }
    }

    #[test]
    fn continuation_examples() {
        let c = dimless(2.0);
        let cb = rho_ab_coefficient(&c, 1e-10).unwrap();
        assert!(rel(cb, (6f64.sqrt() - 2f64.sqrt()) / (6f64.sqrt() + 2f64.sqrt())) < 1e-14);
        assert!(rel(cb, rho_a_coefficient(&c)) < 1e-14);
        assert_eq!(rho_ab_coefficient(&dimless(0.0), 1e-10).unwrap(), 1.0);
        assert!(rho_ab_coefficient(&c, 0.0).is_err());
        assert!(rho_ab_coefficient(&c, -1e-3).is_err());
    }

    #[test]
    fn continuation_converges_below_the_gap() {
        let c = dimless(-5.0);
        let exact = rho_a_coefficient(&c);
        let sweep = continuation_sweep(&c, &[1e-3, 1e-6, 1e-9]).unwrap();
        let errs: Vec<f64> = sweep.iter().map(|&(_, v)| (v - exact).abs()).collect();
        assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");
        assert!(errs[2] / exact < 1e-12);
    }

    #[test]
    fn constant_velocity_trajectory() {
        let c = dimless(1.5);
        let v = 0.5 * (1.0 + 5f64.sqrt());
        let tr = integrate_trajectory(&c, 0.5, Waveguide::Auxiliary, 3.0, 0.01).unwrap();
        assert!(!tr.truncated);
        assert_eq!(tr.times.len(), tr.positions.len());
        assert_eq!(*tr.times.last().unwrap(), 3.0);
        for (t, x) in tr.times.iter().zip(&tr.positions) {
            assert!((x - (0.5 + v * t)).abs() < 1e-10);
        }
        assert!(tr.positions.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn evanescent_particles_rest() {
        let tr = integrate_trajectory(&dimless(-2.0), 1.0, Waveguide::Main, 5.0, 0.1).unwrap();
        assert!(tr.positions.iter().all(|&x| x == 1.0));
        assert_eq!(tr.times.len(), 51);
    }

    #[test]
    fn mixed_trajectory_converges_under_step_halving() {
        let c = dimless(0.0);
        for wg in Waveguide::BOTH {
            let a = integrate_trajectory(&c, 0.5, wg, 2.0, 0.002).unwrap();
            let b = integrate_trajectory(&c, 0.5, wg, 2.0, 0.001).unwrap();
            assert!(!a.truncated && !b.truncated);
            assert!((a.positions.last().unwrap() - b.positions.last().unwrap()).abs() < 1e-8);
            assert!(b.positions.windows(2).all(|w| w[1] >= w[0]));
        }
    }

    #[test]
    fn trajectory_errors() {
        let c = dimless(0.0);
        assert!(integrate_trajectory(&c, 0.0, Waveguide::Main, 1.0, 0.1).is_err());
        assert!(integrate_trajectory(&c, 1.0, Waveguide::Main, 1.0, 0.0).is_err());
        let k = wavenumbers(&dimless(2.0));
        let node = PI / (k.k_minus.re - k.k_plus.re);
        assert!(integrate_trajectory(&dimless(2.0), node, Waveguide::Main, 1.0, 0.1).is_err());
    }

    proptest! {
        #[test]
        fn hj_balance_holds(delta in -10.0f64..10.0, x in 0.01f64..8.0) {
            let c = dimless(delta);
            for wg in Waveguide::BOTH {
                if let Ok(r) = hj_residual(&c, x, wg) {
                    prop_assert!(r.abs() < 1e-8 * c.energy().abs().max(1.0));
                }
            }
        }

        #[test]
        fn continuity_holds(delta in -10.0f64..10.0, x in 0.0f64..8.0, re in -2.0f64..2.0, im in -2.0f64..2.0) {
            prop_assume!(re.abs() + im.abs() > 0.1);
            let c = dimless(delta).with_amplitude(Complex64::new(re, im)).unwrap();
            let scale = c.amplitude().norm_sqr();
            for wg in Waveguide::BOTH {
                prop_assert!(continuity_residual(&c, x, wg).unwrap().abs() < 1e-12 * scale.max(1.0) * (1.0 + delta.abs()));
            }
        }
    }
}
