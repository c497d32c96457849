use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use twinbeam_cli::config::{calibration_to_string, CONFIG_DIR_ENV};
use twinbeam_cli::run::read_sweep_csv;
use twinbeam_cli::{calibrate, load_config, load_targets, run_beat, run_power_scan, run_spectrum, run_sweep};
use twinbeam_core::analysis::{read_scan_csv, write_scan_csv};
use twinbeam_core::spectrum::NoiseSpectrum;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn twinbeam(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_twinbeam"))
        .args(args)
        .env_remove(CONFIG_DIR_ENV)
        .output()
        .expect("binary runs")
}

/// Copy of a shipped config with whole lines replaced, written to `dir`.
fn edited(dir: &Path, preset: &str, edits: &[(&str, &str)]) -> PathBuf {
    let mut text = fs::read_to_string(configs().join(format!("{preset}.toml"))).unwrap();
    let cal = configs().join("calibration.toml");
    text = text.replace(
        "calibration = \"calibration.toml\"",
        &format!("calibration = {:?}", cal.to_str().unwrap()),
    );
    for (from, to) in edits {
        assert!(text.contains(from), "{from} not in {preset}.toml");
        text = text.replace(from, to);
    }
    let path = dir.join(format!("{preset}-edited.toml"));
    fs::write(&path, text).unwrap();
    path
}

fn line_of(path: &Path, needle: &str) -> usize {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .position(|l| l.trim() == needle)
        .expect("needle present")
        + 1
}

#[test]
fn out_of_window_temperature_is_reported_with_its_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = edited(dir.path(), "eom", &[("temperature = 112.0", "temperature = 200.0")]);
    let out = twinbeam(&["spectrum", "--config", path.to_str().unwrap(), "--out-dir", dir.path().to_str().unwrap()]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    let line = line_of(&path, "temperature = 200.0");
    assert!(err.contains(&format!(":{line}:")), "{err}");
    assert!(err.contains("temperature"), "{err}");
    assert!(!dir.path().join("spectrum.csv").exists());
}

#[test]
fn unknown_keys_and_syntax_errors_carry_lines() {
    let dir = tempfile::tempdir().unwrap();
    let path = edited(dir.path(), "eom", &[("rbw = 30e3", "rbw = 30e3\nresolution = 1")]);
    let err = load_config(&path).unwrap_err();
    assert_eq!(err.line, Some(line_of(&path, "resolution = 1")));
    assert!(err.message.contains("resolution"), "{err}");

    let path = edited(dir.path(), "eom", &[("pump_power = 0.6", "pump_power = = 0.6")]);
    let err = load_config(&path).unwrap_err();
    assert_eq!(err.line, Some(line_of(&path, "pump_power = = 0.6")));

    let path = edited(dir.path(), "eom", &[("preset = \"eom\"", "preset = \"laser\"")]);
    let err = load_config(&path).unwrap_err();
    assert_eq!(err.line, Some(line_of(&path, "preset = \"laser\"")));
    assert!(err.message.contains("independent, pll, eom"), "{err}");

    let path = edited(dir.path(), "eom", &[("seed = 20181016\n", "")]);
    let err = load_config(&path).unwrap_err();
    assert!(err.message.contains("seed"), "{err}");
}

#[test]
fn sweep_grid_outside_model_window_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = edited(dir.path(), "eom", &[("grid = [98.0, 117.0, 1.0]", "grid = [80.0, 117.0, 1.0]")]);
    let err = load_config(&path).unwrap_err();
    assert_eq!(err.line, Some(line_of(&path, "grid = [80.0, 117.0, 1.0]")));

    let cfg = load_config(&configs().join("eom.toml")).unwrap();
    assert!(cfg.clone().with_sweep(Some("temperature"), Some("98:130:1")).is_err());
    assert!(cfg.with_sweep(Some("pump"), Some("0:1:0.1")).is_ok());
}

#[test]
fn unknown_axis_lists_the_valid_ones() {
    let cfg = configs().join("eom.toml");
    let out = twinbeam(&["sweep", "--config", cfg.to_str().unwrap(), "--axis", "density"]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    for axis in ["pump", "delta1", "delta2", "temperature"] {
        assert!(err.contains(axis), "{err}");
    }
}

#[test]
fn config_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_twinbeam"))
        .args(["beat", "--config", "eom", "--out-dir", dir.path().to_str().unwrap()])
        .env(CONFIG_DIR_ENV, configs())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("beat.csv").exists());

    let out = twinbeam(&["beat", "--config", "eom"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains(CONFIG_DIR_ENV));
}

#[test]
fn zero_pump_spectrum_sits_on_the_snl() {
    let dir = tempfile::tempdir().unwrap();
    let path = edited(dir.path(), "eom", &[("pump_power = 0.6", "pump_power = 0.0")]);
    let cfg = load_config(&path).unwrap();
    let s = run_spectrum(&cfg, dir.path()).unwrap();
    assert_eq!(s.gain, 1.0);
    let text = fs::read(dir.path().join("spectrum.csv")).unwrap();
    let snl = NoiseSpectrum::read_csv(&fs::read(dir.path().join("snl.csv")).unwrap()[..])
        .unwrap()
        .into_absolute()
        .unwrap();
    let spectrum = NoiseSpectrum::read_csv(&text[..]).unwrap().into_normalized(snl).unwrap();
    for &db in &spectrum.power_db {
        assert!(db.abs() < 0.2, "{db}");
    }
}

#[test]
fn unit_gain_scan_has_unit_slope_ratio() {
    let dir = tempfile::tempdir().unwrap();
    // the spectrum is flat at G = 1, so a wide band can be averaged
    let path = edited(
        dir.path(),
        "eom",
        &[
            ("seed_power = 175e-6", "seed_power = 175e-6\ngain_override = 1.0"),
            ("band_half_width = 20e3", "band_half_width = 1e6"),
            ("analysis_freq = 1e6\nband_half_width", "analysis_freq = 2e6\nband_half_width"),
        ],
    );
    let cfg = load_config(&path).unwrap();
    let s = run_power_scan(&cfg, dir.path()).unwrap();
    assert!((s.ratio - 1.0).abs() < 0.01, "{} ± {}", s.ratio, s.ratio_stderr);
}

#[test]
fn shipped_sweeps_have_the_expected_shape() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = load_config(&configs().join("eom.toml")).unwrap();

    let t = run_sweep(&cfg.clone().with_sweep(Some("temperature"), Some("98:117:1")).unwrap(), dir.path()).unwrap();
    assert!((t.values[t.argmin_noise()] - 112.0).abs() <= 1.0);
    assert!(t.gain.windows(2).all(|w| w[1] > w[0]));

    let d = run_sweep(&cfg.clone().with_sweep(Some("delta2"), Some("-44e6:48e6:4e6")).unwrap(), dir.path()).unwrap();
    assert!(d.gain.windows(2).all(|w| w[1] < w[0]));
    assert!(d.values[d.argmin_noise()].abs() <= 4e6);

    let p = run_sweep(&cfg.with_sweep(Some("pump"), Some("0:1:0.05")).unwrap(), dir.path()).unwrap();
    assert!(p.gain.windows(2).all(|w| w[1] > w[0]));
    assert_eq!(p.gain[0], 1.0);
}

#[test]
fn calibrate_reproduces_the_shipped_calibration() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("calibration.toml");
    let out = twinbeam(&[
        "calibrate",
        "--targets",
        configs().join("targets.toml").to_str().unwrap(),
        "--output",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(
        fs::read(&out_path).unwrap(),
        fs::read(configs().join("calibration.toml")).unwrap()
    );
}

fn edited_targets(dir: &Path, from: &str, to: &str) -> PathBuf {
    let text = fs::read_to_string(configs().join("targets.toml")).unwrap();
    assert!(text.contains(from));
    let path = dir.join("targets.toml");
    fs::write(&path, text.replace(from, to)).unwrap();
    path
}

#[test]
fn zero_db_anchor_needs_no_gain() {
    let dir = tempfile::tempdir().unwrap();
    let path = edited_targets(dir.path(), "squeezing_db = -6.5", "squeezing_db = 0.0");
    let report = calibrate(&load_targets(&path).unwrap()).unwrap();
    assert!(report.calibration.g0.abs() < 1e-9, "{}", report.calibration.g0);
    assert!(report.is_feasible(), "{:?}", report.violations);
}

#[test]
fn missing_anchor_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = edited_targets(
        dir.path(),
        "[anchor]\nsqueezing_db = -6.5\nanalysis_freq = 1e6\npreset = \"eom\"\n",
        "",
    );
    let out = twinbeam(&["calibrate", "--targets", path.to_str().unwrap(), "--output", dir.path().join("c.toml").to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("anchor"));
    assert!(!dir.path().join("c.toml").exists());
}

#[test]
fn unreachable_anchor_reports_violations() {
    let dir = tempfile::tempdir().unwrap();
    let path = edited_targets(dir.path(), "squeezing_db = -6.5", "squeezing_db = -30.0");
    let report = calibrate(&load_targets(&path).unwrap()).unwrap();
    assert!(!report.is_feasible());
    assert!(report.violations.iter().any(|v| v.contains("anchor")), "{:?}", report.violations);

    let out = twinbeam(&["calibrate", "--targets", path.to_str().unwrap(), "--output", dir.path().join("c.toml").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("cannot be met"));
}

#[test]
fn calibration_file_round_trips() {
    let cal = twinbeam_cli::load_calibration(&configs().join("calibration.toml")).unwrap();
    assert_eq!(
        calibration_to_string(&cal),
        fs::read_to_string(configs().join("calibration.toml")).unwrap()
    );
}

#[test]
fn output_csvs_round_trip_through_the_readers() {
    let dir = tempfile::tempdir().unwrap();
    let path = edited(
        dir.path(),
        "pll",
        &[("samples_log2 = 23", "samples_log2 = 20"), ("samples_log2 = 22", "samples_log2 = 18")],
    );
    let cfg = load_config(&path).unwrap();
    let d = dir.path();

    run_spectrum(&cfg, d).unwrap();
    for name in ["spectrum.csv", "snl.csv", "floor.csv"] {
        let bytes = fs::read(d.join(name)).unwrap();
        let raw = NoiseSpectrum::read_csv(&bytes[..]).unwrap();
        let spectrum = if name == "spectrum.csv" {
            let snl = NoiseSpectrum::read_csv(&fs::read(d.join("snl.csv")).unwrap()[..])
                .unwrap()
                .into_absolute()
                .unwrap();
            raw.into_normalized(snl).unwrap()
        } else {
            raw.into_absolute().unwrap()
        };
        let mut again = Vec::new();
        spectrum.write_csv(&mut again).unwrap();
        assert_eq!(again, bytes, "{name}");
    }

    run_power_scan(&cfg, d).unwrap();
    for name in ["scan.csv", "scan_snl.csv"] {
        let bytes = fs::read(d.join(name)).unwrap();
        let points = read_scan_csv(&bytes[..]).unwrap();
        assert_eq!(points.len(), cfg.power_scan.seed_powers.len());
        let mut again = Vec::new();
        write_scan_csv(&points, &mut again).unwrap();
        assert_eq!(again, bytes, "{name}");
    }

    let r = run_sweep(&cfg, d).unwrap();
    let rows = read_sweep_csv(&fs::read_to_string(d.join("sweep.csv")).unwrap()).unwrap();
    assert_eq!(rows.len(), r.values.len());
    for (i, row) in rows.iter().enumerate() {
        assert_eq!(*row, [r.values[i], r.gain[i], r.noise_linear[i], r.squeezing_db[i]]);
    }

    run_beat(&cfg, d).unwrap();
    let bytes = fs::read(d.join("beat.csv")).unwrap();
    let beat = NoiseSpectrum::read_csv(&bytes[..]).unwrap().into_absolute().unwrap();
    let mut again = Vec::new();
    beat.write_csv(&mut again).unwrap();
    assert_eq!(again, bytes);
}

#[test]
fn seed_flag_changes_the_realization() {
    let dir = tempfile::tempdir().unwrap();
    let path = edited(dir.path(), "eom", &[("samples_log2 = 23", "samples_log2 = 18")]);
    let run = |seed: &str, sub: &str| {
        let out_dir = dir.path().join(format!("{sub}-{seed}"));
        let out = twinbeam(&["spectrum", "--config", path.to_str().unwrap(), "--seed", seed, "--out-dir", out_dir.to_str().unwrap()]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        fs::read(out_dir.join("spectrum.csv")).unwrap()
    };
    assert_eq!(run("1", "a"), run("1", "b"));
    assert_ne!(run("1", "a"), run("2", "a"));
}
