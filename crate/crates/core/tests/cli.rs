use std::path::Path;
use std::process::Command as Process;

use bohm_tunnel::cli::{parse_config, Cli, Command, Format, Mode, Settings, Sweep};
use bohm_tunnel::{Error, Regime, Waveguide};
use clap::Parser;

const BIN: &str = env!("CARGO_BIN_EXE_bohm-tunnel");

fn write_config(dir: &Path, text: &str) -> std::path::PathBuf {
    let path = dir.join("run.toml");
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn defaults_are_dimensionless() {
    let req = parse_config(Mode::Wavefield, None, Settings::default()).unwrap();
    let c = req.config;
    assert_eq!((c.hbar(), c.mass(), c.coupling(), c.step_potential(), c.energy()), (1.0, 1.0, 1.0, 0.0, 0.0));
    assert_eq!(c.delta(), 1.0);
    assert_eq!(req.sweep, Sweep::Position { x_min: 0.0, x_max: 10.0, points: 500 });
    assert_eq!(req.format, Format::Csv);
    assert_eq!(req.epsilon, 1e-8);
}

#[test]
fn file_then_flags() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), "mass = 2.0\ncoupling = 0.5\ndelta = -3.0\nwaveguide = \"aux\"\n");
    let flags = Settings { mass: Some(4.0), ..Settings::default() };
    let req = parse_config(Mode::Trajectory, Some(&path), flags).unwrap();
    assert_eq!(req.config.mass(), 4.0);
    assert_eq!(req.config.coupling(), 0.5);
    assert!((req.config.delta() + 3.0).abs() < 1e-15);
    assert_eq!(req.trajectory.waveguide, Waveguide::Auxiliary);
}

#[test]
fn energy_flag_replaces_file_delta() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), "delta = -3.0\n");
    let flags = Settings { energy: Some(2.0), ..Settings::default() };
    let req = parse_config(Mode::Wavefield, Some(&path), flags).unwrap();
    assert_eq!(req.config.energy(), 2.0);
}

#[test]
fn unknown_key_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), "mass = 1.0\ncuopling = 2.0\n");
    match parse_config(Mode::Wavefield, Some(&path), Settings::default()) {
        Err(Error::UnknownKey(k)) => assert_eq!(k, "cuopling"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn invalid_settings_rejected() {
    let cases = [
        Settings { coupling: Some(0.0), ..Settings::default() },
        Settings { coupling: Some(-1.0), ..Settings::default() },
        Settings { mass: Some(0.0), ..Settings::default() },
        Settings { delta: Some(1.0), energy: Some(1.0), ..Settings::default() },
        Settings { x_min: Some(-1.0), ..Settings::default() },
        Settings { x_min: Some(3.0), x_max: Some(2.0), ..Settings::default() },
        Settings { points: Some(1), ..Settings::default() },
    ];
    for s in cases {
        assert!(parse_config(Mode::Wavefield, None, s.clone()).is_err(), "{s:?}");
    }
    let s = Settings { delta_min: Some(2.0), delta_max: Some(-2.0), ..Settings::default() };
    assert!(parse_config(Mode::SpeedCurve, None, s).is_err());
    let s = Settings { positions: Some(vec![]), ..Settings::default() };
    assert!(parse_config(Mode::VelocityCurve, None, s).is_err());
    let missing = Path::new("/nonexistent/run.toml");
    assert!(matches!(parse_config(Mode::Wavefield, Some(missing), Settings::default()), Err(Error::Io { .. })));
}

#[test]
fn delta_and_energy_flags_conflict() {
    assert!(Cli::try_parse_from(["bohm-tunnel", "wavefield", "--delta", "1", "--energy", "2"]).is_err());
    let cli = Cli::try_parse_from(["bohm-tunnel", "speed-curve", "--delta-min", "-2", "--positions", "1,2"]).unwrap();
    let Command::SpeedCurve(args) = cli.command else { panic!() };
    assert_eq!(args.delta_min, Some(-2.0));
    assert_eq!(args.positions, Some(vec![1.0, 2.0]));
}

#[test]
fn binary_writes_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("speed.csv");
    let status = Process::new(BIN).args(["speed-curve", "--points", "11", "--out"]).arg(&out).status().unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(out).unwrap();
    assert_eq!(text.lines().count(), 12);
    assert!(text.starts_with("delta_over_hJ0,v_closed_form,v_fit_from_samples,v_original_model\n"));
}

#[test]
fn verify_passes_and_catches_sign_flip() {
    let ok = Process::new(BIN).arg("verify").output().unwrap();
    assert!(ok.status.success(), "{}", String::from_utf8_lossy(&ok.stdout));
    let bad = Process::new(BIN).args(["verify", "--inject-j0-sign-flip"]).output().unwrap();
    assert!(!bad.status.success());
    let text = String::from_utf8_lossy(&bad.stdout);
    assert!(text.lines().any(|l| l.starts_with("continuity_main,") && l.ends_with(",false")), "{text}");
}

#[test]
fn bad_config_exits_nonzero() {
    let out = Process::new(BIN).args(["wavefield", "--coupling", "0"]).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("coupling"));
}

#[test]
fn default_and_energy_regimes() {
    let req = parse_config(Mode::Wavefield, None, Settings::default()).unwrap();
    assert_eq!(req.config.regime(), Regime::MixedTransmissionEvanescent);
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), "energy = 5.0\n");
    let req = parse_config(Mode::Wavefield, Some(&path), Settings::default()).unwrap();
    assert_eq!(req.config.delta(), 6.0);
    assert_eq!(req.config.regime(), Regime::TwoTransmission);
}

fn speed_rows(args: &[&str]) -> Vec<Vec<f64>> {
    let out = Process::new(BIN).arg("speed-curve").args(args).output().unwrap();
    assert!(out.status.success());
    String::from_utf8(out.stdout)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

#[test]
fn speed_curve_shape() {
    let rows = speed_rows(&[]);
    assert_eq!(rows.len(), 201);
    for r in rows.iter().filter(|r| r[0].abs() < 1.0) {
        assert!((r[1] - 1.0).abs() < 1e-12, "{r:?}");
    }
    assert!((rows[0][1] - rows[200][1]).abs() < 1e-12 * rows[0][1]);
    let far = speed_rows(&["--delta-min", "999", "--delta-max", "1000", "--points", "2"]);
    let ratio = far[1][1] / far[1][3];
    assert!((1.0 - 1e-3..=1.0).contains(&ratio), "{ratio}");
}

#[test]
fn velocity_curve_regimes() {
    let out = Process::new(BIN).args(["velocity-curve", "--points", "21"]).output().unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<Vec<Option<f64>>> =
        text.lines().skip(1).map(|l| l.split(',').map(|v| v.parse().ok()).collect()).collect();
    assert_eq!(rows.len(), 84);
    for r in &rows {
        let (d, x, vm, va) = (r[0].unwrap(), r[1].unwrap(), r[2].unwrap(), r[3].unwrap());
        if d <= -1.0 {
            assert_eq!((vm, va), (0.0, 0.0));
        } else if d > 1.0 {
            assert_eq!(vm, va);
        } else if d < 1.0 && x <= 10.0 {
            // the evanescent mode has not yet decayed, so the guides still differ
            assert!((vm - va).abs() > 1e-9, "{r:?}");
        }
    }
    // above the gap the velocity does not depend on the position
    let at = |x: f64, d: f64| rows.iter().find(|r| r[1] == Some(x) && r[0] == Some(d)).unwrap()[2].unwrap();
    assert_eq!(at(5.0, 3.0), at(40.0, 3.0));
}

#[test]
fn unwritable_path_is_named() {
    let out = Process::new(BIN).args(["coefficients", "--out", "/nonexistent/dir/c.csv"]).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent/dir/c.csv"));
}
