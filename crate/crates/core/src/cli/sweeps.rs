use rayon::prelude::*;

use super::{Cell, Format, Mode, Sweep, SweepRequest, Table};
use crate::bohmian::{bohm_velocity, integrate_trajectory, tunnelling_current, Waveguide};
use crate::closed_form::{
    coefficient_report, default_fit_window, eval_fields, fit_speed_from_samples, population, population_samples,
    semiclassical_speed, DEFAULT_FIT_SAMPLES,
};
use crate::error::{Error, Result};
use crate::model::PhysicalConfig;
use crate::verify::{linspace, run_verification, VerifyOptions};

/// Rendered output of one request.
#[derive(Clone, Debug, PartialEq)]
pub struct Output {
    pub text: String,
    /// False only when a verification check failed.
    pub success: bool,
    /// Non-fatal conditions worth reporting on stderr.
    pub warnings: Vec<String>,
}

fn render(table: &Table, format: Format) -> String {
    match format {
        Format::Csv => table.to_csv(),
        Format::Json => table.to_json(),
    }
}

fn at_detuning(config: &PhysicalConfig, delta_over_hj0: f64) -> Result<PhysicalConfig> {
    config.with_delta(delta_over_hj0 * config.coupling_energy())
}

fn detunings(sweep: &Sweep) -> &[f64] {
    match sweep {
        Sweep::Detuning(d) => d,
        _ => &[],
    }
}

fn wavefield(req: &SweepRequest) -> Result<Table> {
    let Sweep::Position { x_min, x_max, points } = req.sweep else {
        return Err(Error::Config("wavefield needs a position sweep".into()));
    };
    let c = &req.config;
    let rows = linspace(x_min, x_max, points)
        .par_iter()
        .map(|&x| {
            let f = eval_fields(c, x)?;
            let raw = f.psi_a.norm_sqr();
            Ok(vec![
                Cell::Num(x),
                Cell::Num(f.psi_m.re),
                Cell::Num(f.psi_m.im),
                Cell::Num(f.psi_a.re),
                Cell::Num(f.psi_a.im),
                Cell::Num(raw),
                Cell::maybe(population(c, x).ok().map(|p| p.rho_a_norm)),
                Cell::maybe(tunnelling_current(c, x).ok()),
                Cell::maybe(bohm_velocity(c, x, Waveguide::Main).ok()),
                Cell::maybe(bohm_velocity(c, x, Waveguide::Auxiliary).ok()),
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Table::new(
        vec!["x", "re_psi_m", "im_psi_m", "re_psi_a", "im_psi_a", "rho_a_raw", "rho_a_norm", "j0", "v_m", "v_a"],
        rows,
    ))
}

fn fitted_speed(c: &PhysicalConfig) -> Result<f64> {
    let window = default_fit_window(c);
    let samples = population_samples(c, window, DEFAULT_FIT_SAMPLES)?;
    fit_speed_from_samples(&samples, c.coupling(), window)
}

fn speed_curve(req: &SweepRequest) -> Result<Table> {
    let rows = detunings(&req.sweep)
        .par_iter()
        .map(|&d| {
            let c = at_detuning(&req.config, d)?;
            Ok(vec![
                Cell::Num(d),
                Cell::Num(semiclassical_speed(&c)),
                Cell::maybe(fitted_speed(&c).ok()),
                Cell::Num((2.0 * c.delta().abs() / c.mass()).sqrt()),
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Table::new(vec!["delta_over_hJ0", "v_closed_form", "v_fit_from_samples", "v_original_model"], rows))
}

fn velocity_curve(req: &SweepRequest) -> Result<Table> {
    let cells: Vec<(f64, f64)> =
        req.positions.iter().flat_map(|&x| detunings(&req.sweep).iter().map(move |&d| (x, d))).collect();
    let rows = cells
        .par_iter()
        .map(|&(x, d)| {
            let c = at_detuning(&req.config, d)?;
            Ok(vec![
                Cell::Num(d),
                Cell::Num(x),
                Cell::maybe(bohm_velocity(&c, x, Waveguide::Main).ok()),
                Cell::maybe(bohm_velocity(&c, x, Waveguide::Auxiliary).ok()),
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Table::new(vec!["delta_over_hJ0", "x", "v_m", "v_a"], rows))
}

fn coefficients(req: &SweepRequest) -> Result<Table> {
    let rows = detunings(&req.sweep)
        .par_iter()
        .map(|&d| {
            let c = at_detuning(&req.config, d)?;
            let r = coefficient_report(&c, req.epsilon)?;
            Ok(vec![
                Cell::Num(d),
                Cell::Text(r.regime.label().to_owned()),
                Cell::Num(r.closed_form),
                Cell::Num(r.bohmian),
                Cell::Num(r.oracle),
                Cell::Num(r.max_relative_spread()),
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Table::new(vec!["delta_over_hJ0", "regime", "closed_form", "bohmian", "oracle", "max_relative_spread"], rows))
}

fn trajectory(req: &SweepRequest, warnings: &mut Vec<String>) -> Result<Table> {
    let t = req.trajectory;
    let tr = integrate_trajectory(&req.config, t.x0, t.waveguide, t.t_end, t.dt)?;
    if tr.truncated {
        warnings.push(format!(
            "trajectory stopped at t = {} before t_end = {}",
            tr.times.last().copied().unwrap_or(0.0),
            t.t_end
        ));
    }
    let rows = tr.times.iter().zip(&tr.positions).map(|(&t, &x)| vec![Cell::Num(t), Cell::Num(x)]).collect();
    Ok(Table::new(vec!["t", "x"], rows))
}

/// Evaluate `req`. `options` only affects [`Mode::Verify`].
pub fn run(req: &SweepRequest, options: VerifyOptions) -> Result<Output> {
    let mut warnings = Vec::new();
    let table = match req.mode {
        Mode::Wavefield => wavefield(req)?,
        Mode::SpeedCurve => speed_curve(req)?,
        Mode::VelocityCurve => velocity_curve(req)?,
        Mode::Coefficients => coefficients(req)?,
        Mode::Trajectory => trajectory(req, &mut warnings)?,
        Mode::Verify => {
            let report = run_verification(&req.config, options)?;
            let text = match req.format {
                Format::Json => {
                    let mut s = serde_json::to_string_pretty(&report).expect("report serializes");
                    s.push('\n');
                    s
                }
                Format::Csv => {
                    let rows = report
                        .checks
                        .iter()
                        .map(|c| {
                            vec![
                                Cell::Text(c.name.clone()),
                                Cell::Num(c.max_residual),
                                Cell::Num(c.tolerance),
                                Cell::Bool(c.passed),
                            ]
                        })
                        .collect();
                    Table::new(vec!["check", "max_residual", "tolerance", "passed"], rows).to_csv()
                }
            };
            return Ok(Output { text, success: report.passed(), warnings });
        }
    };
    Ok(Output { text: render(&table, req.format), success: true, warnings })
}
