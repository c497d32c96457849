//! The simulation runs behind each subcommand. Every run writes its files
//! into one output directory; results are deterministic in the config and
//! seed.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;
use twinbeam_core::analysis::{
    fit_noise_vs_power, line_fwhm, max_squeezing, slope_ratio, squeezing_bandwidth, write_scan_csv, LineFit,
    PowerScanPoint,
};
use twinbeam_core::detection::{
    band_power, measure_twin_spectrum, subtract_background, synthesize_coherent_trace, synthesize_difference_trace,
    twin_optical_power, AnalyzerSettings,
};
use twinbeam_core::medium::{squeezing_vs, SweepResult};
use twinbeam_core::noise::to_db;
use twinbeam_core::readout::Setup;
use twinbeam_core::seed::stage_seed;
use twinbeam_core::source::beat_spectrum;
use twinbeam_core::spectrum::NoiseSpectrum;

use crate::config::ExperimentConfig;

pub type RunResult<T> = anyhow::Result<T>;

fn create(dir: &Path, name: &str) -> RunResult<BufWriter<File>> {
    let path = dir.join(name);
    let f = File::create(&path).map_err(|e| anyhow::anyhow!("cannot create {}: {e}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn write_spectrum(dir: &Path, name: &str, s: &NoiseSpectrum) -> RunResult<()> {
    let mut w = create(dir, name)?;
    s.write_csv(&mut w)?;
    w.flush()?;
    Ok(())
}

fn write_toml<T: Serialize>(dir: &Path, name: &str, value: &T) -> RunResult<()> {
    let mut w = create(dir, name)?;
    w.write_all(toml::to_string(value)?.as_bytes())?;
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumSummary {
    pub preset: String,
    pub seed: u64,
    pub gain: f64,
    /// Expected normalized noise before spectral shaping, dB.
    pub base_noise_db: f64,
    pub max_squeezing_db: f64,
    pub max_squeezing_freq_hz: f64,
    pub bandwidth_hz: f64,
    pub bandwidth_lower_hz: f64,
    pub bandwidth_upper_hz: f64,
    pub bandwidth_threshold_db: f64,
    /// Sub-threshold region reaches the top of the analyzer span.
    pub exceeds_span: bool,
    pub no_squeezing: bool,
}

/// Simulates one analyzer measurement of the intensity-difference noise.
///
/// Writes `spectrum.csv` (normalized to the SNL), `snl.csv` (the coherent
/// reference with the electronic floor subtracted), `floor.csv` and
/// `summary.toml`.
pub fn run_spectrum(cfg: &ExperimentConfig, out_dir: &Path) -> RunResult<SpectrumSummary> {
    fs::create_dir_all(out_dir)?;
    let readout = cfg.setup.readout()?;
    let measured = measure_twin_spectrum(&readout, &cfg.detector, &cfg.analyzer, cfg.duration(), stage_seed(cfg.seed, "spectrum"))?;
    let snl = subtract_background(&measured.snl, &measured.floor)?;
    let spectrum = &measured.normalized;

    let band = (cfg.analyzer.f_start, cfg.analyzer.f_stop);
    let (freq, db) = max_squeezing(spectrum, band)?;
    let threshold = cfg.spectrum.bandwidth_threshold_db;
    let bw = squeezing_bandwidth(spectrum, threshold)?;
    let summary = SpectrumSummary {
        preset: cfg.setup.source.preset_name().into(),
        seed: cfg.seed,
        gain: readout.model.gain,
        base_noise_db: to_db(readout.base_noise),
        max_squeezing_db: db,
        max_squeezing_freq_hz: freq,
        bandwidth_hz: bw.width,
        bandwidth_lower_hz: bw.lower,
        bandwidth_upper_hz: bw.upper,
        bandwidth_threshold_db: threshold,
        exceeds_span: bw.exceeds_span,
        no_squeezing: bw.no_squeezing,
    };
    write_spectrum(out_dir, "spectrum.csv", spectrum)?;
    write_spectrum(out_dir, "snl.csv", &snl)?;
    write_spectrum(out_dir, "floor.csv", &measured.floor)?;
    write_toml(out_dir, "summary.toml", &summary)?;
    Ok(summary)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitSummary {
    pub slope: f64,
    pub slope_stderr: f64,
    pub intercept: f64,
}

impl From<LineFit> for FitSummary {
    fn from(f: LineFit) -> Self {
        Self {
            slope: f.slope,
            slope_stderr: f.slope_stderr,
            intercept: f.intercept,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerScanSummary {
    pub preset: String,
    pub seed: u64,
    pub analysis_freq_hz: f64,
    pub snl_analysis_freq_hz: f64,
    pub twin: FitSummary,
    pub snl: FitSummary,
    pub ratio: f64,
    pub ratio_stderr: f64,
    pub squeezing_db: f64,
    pub squeezing_db_stderr: f64,
}

/// Band power at `f` in V²/Hz over the bins within `half_width`.
fn band_at(trace: &[f64], settings: &AnalyzerSettings, f: f64, half_width: f64) -> RunResult<(f64, f64)> {
    let b = band_power(trace, settings, f - half_width, f + half_width)?;
    Ok((b.psd, b.stderr))
}

/// Records twin-beam and coherent-reference noise power against seed power
/// and fits both lines.
///
/// The coherent reference at each point carries the same optical power as
/// the twin beams, so both lines share an abscissa (total power on the
/// detector) and their slope ratio is the normalized noise. Writes `scan.csv` (twin beams),
/// `scan_snl.csv` (coherent reference) and `scan_summary.toml`.
pub fn run_power_scan(cfg: &ExperimentConfig, out_dir: &Path) -> RunResult<PowerScanSummary> {
    fs::create_dir_all(out_dir)?;
    let opts = &cfg.power_scan;
    let duration = opts.samples as f64 / cfg.analyzer.sample_rate;
    let base = cfg.setup.readout()?;
    let measured: Vec<(PowerScanPoint, PowerScanPoint)> = opts
        .seed_powers
        .par_iter()
        .enumerate()
        .map(|(i, &p)| -> RunResult<_> {
            let setup = Setup {
                seed_power: p,
                ..cfg.setup
            };
            // the normalized noise does not depend on the seed power, so only
            // the twin model changes between points
            let mut readout = base.clone();
            readout.model = setup.response_at(setup.medium.delta_two)?.twin_model(p, &setup.losses)?;
            let label = format!("power-scan/{i}");
            let seed = stage_seed(cfg.seed, &label);
            let power = twin_optical_power(&readout.model, &cfg.detector);
            let twin = synthesize_difference_trace(&readout, &cfg.detector, duration, cfg.analyzer.sample_rate, stage_seed(seed, "twin"))?;
            let (tn, ts) = band_at(&twin, &cfg.analyzer, opts.analysis_freq, opts.band_half_width)?;
            drop(twin);
            let coh = synthesize_coherent_trace(power, &cfg.detector, duration, cfg.analyzer.sample_rate, stage_seed(seed, "snl"))?;
            let (cn, cs) = band_at(&coh, &cfg.analyzer, opts.snl_analysis_freq, opts.band_half_width)?;
            Ok((
                PowerScanPoint {
                    total_power: power,
                    noise_power: tn,
                    std_dev: ts,
                },
                PowerScanPoint {
                    total_power: power,
                    noise_power: cn,
                    std_dev: cs,
                },
            ))
        })
        .collect::<RunResult<_>>()?;
    let (twin_points, snl_points): (Vec<_>, Vec<_>) = measured.into_iter().unzip();
    let twin_fit = fit_noise_vs_power(&twin_points)?;
    let snl_fit = fit_noise_vs_power(&snl_points)?;
    let (ratio, ratio_stderr) = slope_ratio(&twin_fit, &snl_fit)?;
    let summary = PowerScanSummary {
        preset: cfg.setup.source.preset_name().into(),
        seed: cfg.seed,
        analysis_freq_hz: opts.analysis_freq,
        snl_analysis_freq_hz: opts.snl_analysis_freq,
        twin: twin_fit.into(),
        snl: snl_fit.into(),
        ratio,
        ratio_stderr,
        squeezing_db: to_db(ratio),
        squeezing_db_stderr: 10.0 / std::f64::consts::LN_10 * ratio_stderr / ratio,
    };
    let mut w = create(out_dir, "scan.csv")?;
    write_scan_csv(&twin_points, &mut w)?;
    w.flush()?;
    let mut w = create(out_dir, "scan_snl.csv")?;
    write_scan_csv(&snl_points, &mut w)?;
    w.flush()?;
    write_toml(out_dir, "scan_summary.toml", &summary)?;
    Ok(summary)
}

pub const SWEEP_CSV_HEADER: &str = "value,gain,noise_linear,squeezing_db";

/// Gain and squeezing along the configured axis at the sweep analysis
/// frequency. Writes `sweep.csv`.
pub fn run_sweep(cfg: &ExperimentConfig, out_dir: &Path) -> RunResult<SweepResult> {
    fs::create_dir_all(out_dir)?;
    let s = &cfg.sweep;
    let shape = cfg.setup.shape.multiplier(s.analysis_freq);
    let mut result = squeezing_vs(s.axis, &s.grid, &cfg.setup.medium, &cfg.setup.calibration, &cfg.setup.losses, shape)?;
    if let Some(g) = cfg.setup.gain_override {
        result = override_gain(cfg, &result, g)?;
    }
    let mut w = create(out_dir, "sweep.csv")?;
    writeln!(w, "{SWEEP_CSV_HEADER}")?;
    for i in 0..result.values.len() {
        writeln!(
            w,
            "{},{},{},{}",
            result.values[i], result.gain[i], result.noise_linear[i], result.squeezing_db[i]
        )?;
    }
    w.flush()?;
    Ok(result)
}

fn override_gain(cfg: &ExperimentConfig, r: &SweepResult, gain: f64) -> RunResult<SweepResult> {
    let shape = cfg.setup.shape.multiplier(cfg.sweep.analysis_freq);
    let mut out = r.clone();
    for (i, &v) in r.values.iter().enumerate() {
        let setup = Setup {
            medium: r.axis.apply(&cfg.setup.medium, v),
            gain_override: Some(gain),
            ..cfg.setup
        };
        let resp = setup.response_at(setup.medium.delta_two)?;
        let n = 1.0 - shape * (1.0 - resp.noise_ratio(&setup.losses)?);
        out.gain[i] = gain;
        out.noise_linear[i] = n;
        out.squeezing_db[i] = to_db(n);
    }
    Ok(out)
}

/// Reads a `sweep.csv` back.
pub fn read_sweep_csv(text: &str) -> RunResult<Vec<[f64; 4]>> {
    let mut lines = text.lines();
    anyhow::ensure!(lines.next() == Some(SWEEP_CSV_HEADER), "sweep.csv header must be '{SWEEP_CSV_HEADER}'");
    lines
        .map(|l| {
            let v: Vec<f64> = l.split(',').map(str::parse).collect::<Result<_, _>>()?;
            anyhow::ensure!(v.len() == 4, "expected 4 columns in '{l}'");
            Ok([v[0], v[1], v[2], v[3]])
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BeatSummary {
    pub preset: String,
    pub center_hz: f64,
    pub span_hz: f64,
    pub rbw_hz: f64,
    pub configured_fwhm_hz: f64,
    pub measured_fwhm_hz: f64,
}

/// Pump-probe beat note on the analyzer. Writes `beat.csv` and
/// `beat_summary.toml`.
pub fn run_beat(cfg: &ExperimentConfig, out_dir: &Path) -> RunResult<BeatSummary> {
    fs::create_dir_all(out_dir)?;
    let source = &cfg.setup.source;
    let spectrum = beat_spectrum(source, cfg.beat.span, cfg.beat.rbw)?;
    let summary = BeatSummary {
        preset: source.preset_name().into(),
        center_hz: source.beat_center(),
        span_hz: cfg.beat.span,
        rbw_hz: cfg.beat.rbw,
        configured_fwhm_hz: source.beat_fwhm(),
        measured_fwhm_hz: line_fwhm(&spectrum)?,
    };
    write_spectrum(out_dir, "beat.csv", &spectrum)?;
    write_toml(out_dir, "beat_summary.toml", &summary)?;
    Ok(summary)
}
