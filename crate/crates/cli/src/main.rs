use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use twinbeam_cli::config::{calibration_to_string, resolve_config_path, CONFIG_DIR_ENV};
use twinbeam_cli::{calibrate, load_config, load_targets, run_beat, run_power_scan, run_spectrum, run_sweep, ExperimentConfig};

#[derive(Parser)]
#[command(name = "twinbeam", version, about = "Twin-beam intensity-difference squeezing simulator")]
struct Cli {
    /// Directory searched for configs given by name.
    #[arg(long, global = true, env = CONFIG_DIR_ENV)]
    config_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Config file, or a config name inside the config directory.
    #[arg(long)]
    config: String,
    /// Overrides the master seed of the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the output directory of the config.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Normalized noise spectrum with SNL and floor traces.
    Spectrum(Common),
    /// Noise power against seed power with slope fits.
    PowerScan {
        #[command(flatten)]
        common: Common,
        /// Comma-separated seed powers in W, replacing the config list.
        #[arg(long, value_delimiter = ',')]
        seed_powers: Option<Vec<f64>>,
    },
    /// Gain and squeezing along one parameter axis.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// pump, delta1, delta2 or temperature.
        #[arg(long)]
        axis: Option<String>,
        /// start:stop:step in the axis unit (W, Hz or °C).
        #[arg(long)]
        grid: Option<String>,
    },
    /// Pump-probe beat note on the analyzer.
    Beat(Common),
    /// Fits a calibration file to a targets file.
    Calibrate {
        /// Targets file, or a targets name inside the config directory.
        #[arg(long)]
        targets: String,
        /// Where to write the calibration.
        #[arg(long, default_value = "calibration.toml")]
        output: PathBuf,
    },
}

fn load(common: &Common, config_dir: Option<&Path>) -> anyhow::Result<(ExperimentConfig, PathBuf)> {
    let path = resolve_config_path(&common.config, config_dir)?;
    let mut cfg = load_config(&path)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    let out = common.out_dir.clone().unwrap_or_else(|| cfg.out_dir.clone());
    Ok((cfg, out))
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    let dir = cli.config_dir.as_deref();
    match cli.command {
        Command::Spectrum(common) => {
            let (cfg, out) = load(&common, dir)?;
            let s = run_spectrum(&cfg, &out)?;
            println!("preset {} seed {} gain {:.4}", s.preset, s.seed, s.gain);
            println!(
                "max squeezing {:.2} dB at {:.3} MHz",
                -s.max_squeezing_db,
                s.max_squeezing_freq_hz / 1e6
            );
            if s.no_squeezing {
                println!("no squeezing below {} dB", s.bandwidth_threshold_db);
            } else {
                println!(
                    "bandwidth {:.3} MHz ({:.3} to {:.3} MHz{})",
                    s.bandwidth_hz / 1e6,
                    s.bandwidth_lower_hz / 1e6,
                    s.bandwidth_upper_hz / 1e6,
                    if s.exceeds_span { ", extends past the span" } else { "" }
                );
            }
            println!("wrote {}", out.display());
        }
        Command::PowerScan { common, seed_powers } => {
            let (mut cfg, out) = load(&common, dir)?;
            if let Some(p) = seed_powers {
                anyhow::ensure!(p.len() >= 3, "--seed-powers needs at least 3 values");
                anyhow::ensure!(p.iter().all(|&x| x > 0.0 && x.is_finite()), "--seed-powers must be > 0");
                cfg.power_scan.seed_powers = p;
            }
            let s = run_power_scan(&cfg, &out)?;
            println!("preset {} seed {}", s.preset, s.seed);
            println!("twin slope {:.6e} ± {:.1e} V²/Hz/W", s.twin.slope, s.twin.slope_stderr);
            println!("SNL slope  {:.6e} ± {:.1e} V²/Hz/W", s.snl.slope, s.snl.slope_stderr);
            println!(
                "ratio {:.4} ± {:.4} -> {:.2} ± {:.2} dB",
                s.ratio, s.ratio_stderr, s.squeezing_db, s.squeezing_db_stderr
            );
            println!("wrote {}", out.display());
        }
        Command::Sweep { common, axis, grid } => {
            let (cfg, out) = load(&common, dir)?;
            let cfg = cfg.with_sweep(axis.as_deref(), grid.as_deref())?;
            let r = run_sweep(&cfg, &out)?;
            let best = r.argmin_noise();
            println!(
                "{} sweep, {} points; best squeezing {:.2} dB at {} {}",
                r.axis,
                r.values.len(),
                -r.squeezing_db[best],
                r.values[best],
                r.axis.unit()
            );
            println!("wrote {}", out.join("sweep.csv").display());
        }
        Command::Beat(common) => {
            let (cfg, out) = load(&common, dir)?;
            let s = run_beat(&cfg, &out)?;
            println!(
                "{} beat at {:.6} GHz: FWHM {:.4e} Hz (configured {:.4e} Hz, rbw {} Hz)",
                s.preset,
                s.center_hz / 1e9,
                s.measured_fwhm_hz,
                s.configured_fwhm_hz,
                s.rbw_hz
            );
            println!("wrote {}", out.display());
        }
        Command::Calibrate { targets, output } => {
            let path = resolve_config_path(&targets, dir)?;
            let t = load_targets(&path)?;
            let report = calibrate(&t).map_err(anyhow::Error::msg)?;
            if !report.is_feasible() {
                eprintln!("{}", twinbeam_cli::InfeasibleTargets(report.violations));
                return Ok(ExitCode::from(2));
            }
            std::fs::write(&output, calibration_to_string(&report.calibration))
                .with_context(|| format!("cannot write {}", output.display()))?;
            println!(
                "g0 {} xs_delta {:e} xs_temp {} -> anchor {:.4} dB",
                report.calibration.g0, report.calibration.xs_delta, report.calibration.xs_temp, report.anchor_db
            );
            println!("wrote {}", output.display());
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
