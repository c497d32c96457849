//! Experiment, calibration and targets files.
//!
//! All three are TOML. Every problem found while loading one is reported as
//! a [`ConfigError`] that names the file and, where possible, the line.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use twinbeam_core::detection::{twin_optical_power, AnalyzerSettings, DetectorModel, SpectralShapePreset};
use twinbeam_core::medium::{linear_grid, LossBudget, MediumCalibration, MediumParams, SweepAxis};
use twinbeam_core::readout::Setup;
use twinbeam_core::source::ProbeSource;

pub const CONFIG_SCHEMA: &str = "twinbeam.config/1";
pub const CALIBRATION_SCHEMA: &str = "twinbeam.calibration/1";
pub const TARGETS_SCHEMA: &str = "twinbeam.targets/1";

/// Directory searched for configs given by bare name.
pub const CONFIG_DIR_ENV: &str = "TWINBEAM_CONFIG_DIR";

/// Seed probe power used when a config does not set one, W.
pub const DEFAULT_SEED_POWER: f64 = 175e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub file: PathBuf,
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "{}:{line}: {}", self.file.display(), self.message),
            None => write!(f, "{}: {}", self.file.display(), self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

/// Source text of a file being loaded, used to map errors to lines.
struct Doc<'a> {
    path: &'a Path,
    text: &'a str,
}

impl Doc<'_> {
    fn error(&self, line: Option<usize>, message: impl Into<String>) -> ConfigError {
        ConfigError {
            file: self.path.to_path_buf(),
            line,
            message: message.into(),
        }
    }

    /// Error at `key` inside `[table]` (or at top level), falling back to the
    /// table header and then to the first line.
    fn at(&self, table: Option<&str>, key: Option<&str>, message: impl Into<String>) -> ConfigError {
        let line = key
            .and_then(|k| key_line(self.text, table, k))
            .or_else(|| table.and_then(|t| header_line(self.text, t)))
            .or(Some(1));
        self.error(line, message)
    }

    fn parse<T: DeserializeOwned>(&self) -> Result<T, ConfigError> {
        toml::from_str(self.text).map_err(|e| {
            let line = e.span().map(|s| line_of(self.text, s.start));
            self.error(line, e.message().trim().to_string())
        })
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

fn header_line(text: &str, table: &str) -> Option<usize> {
    text.lines().position(|l| l.trim() == format!("[{table}]")).map(|i| i + 1)
}

/// Line of `key = ...` inside `[table]`, or before the first table header
/// when `table` is `None`.
fn key_line(text: &str, table: Option<&str>, key: &str) -> Option<usize> {
    let mut current: Option<String> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.starts_with('[') {
            current = Some(line.trim_matches(|c| c == '[' || c == ']').trim().to_string());
            continue;
        }
        if current.as_deref() != table {
            continue;
        }
        if let Some(rest) = line.strip_prefix(key) {
            if rest.trim_start().starts_with('=') {
                return Some(i + 1);
            }
        }
    }
    None
}

/// Validates a section; if it fails, finds the first key that fails on its
/// own against the defaults so the error can point at it.
fn check_section<S>(
    doc: &Doc,
    table: &str,
    raw: Option<&toml::Table>,
    value: &S,
    check: impl Fn(&S) -> Result<(), String>,
) -> Result<(), ConfigError>
where
    S: Default + Serialize + DeserializeOwned,
{
    let Err(message) = check(value) else {
        return Ok(());
    };
    let mut culprit = None;
    if let (Some(raw), Ok(toml::Value::Table(defaults))) = (raw, toml::Value::try_from(S::default())) {
        for (key, v) in raw {
            let mut single = defaults.clone();
            single.insert(key.clone(), v.clone());
            if let Ok(s) = toml::Value::Table(single).try_into::<S>() {
                if check(&s).is_err() {
                    culprit = Some(key.as_str());
                    break;
                }
            }
        }
    }
    Err(doc.at(Some(table), culprit, format!("[{table}] {message}")))
}

fn read(path: &Path) -> Result<String, ConfigError> {
    fs::read_to_string(path).map_err(|e| ConfigError {
        file: path.to_path_buf(),
        line: None,
        message: format!("cannot read file: {e}"),
    })
}

fn check_schema(doc: &Doc, found: &str, expected: &str) -> Result<(), ConfigError> {
    if found != expected {
        return Err(doc.at(None, Some("schema"), format!("schema must be '{expected}', got '{found}'")));
    }
    Ok(())
}

/// Finds a config given on the command line: an existing path wins, then
/// `NAME` and `NAME.toml` inside `config_dir`.
pub fn resolve_config_path(name: &str, config_dir: Option<&Path>) -> Result<PathBuf, ConfigError> {
    let direct = PathBuf::from(name);
    if direct.is_file() {
        return Ok(direct);
    }
    if let Some(dir) = config_dir {
        for candidate in [dir.join(name), dir.join(format!("{name}.toml"))] {
            if candidate.is_file() {
                return Ok(candidate);
            }
        }
    }
    Err(ConfigError {
        file: direct,
        line: None,
        message: match config_dir {
            Some(dir) => format!("no such config (also looked in {})", dir.display()),
            None => format!("no such config (set {CONFIG_DIR_ENV} to search a config directory)"),
        },
    })
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    schema: String,
    seed: u64,
    calibration: String,
    out_dir: Option<String>,
    source: SourceSection,
    #[serde(default)]
    shape: ShapeSection,
    #[serde(default)]
    medium: MediumParams,
    #[serde(default)]
    losses: LossBudget,
    #[serde(default)]
    twin: TwinSection,
    #[serde(default)]
    detector: DetectorSection,
    #[serde(default)]
    analyzer: AnalyzerSection,
    #[serde(default)]
    spectrum: SpectrumOptions,
    #[serde(default)]
    power_scan: PowerScanSection,
    #[serde(default)]
    sweep: SweepSection,
    #[serde(default)]
    beat: BeatOptions,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SourceSection {
    preset: String,
    beat_fwhm: Option<f64>,
    /// PLL only.
    excess_noise_db: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ShapeSection {
    low_corner: Option<f64>,
    high_corner: Option<f64>,
    classical_excess: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct TwinSection {
    seed_power: Option<f64>,
    gain_override: Option<f64>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct DetectorSection {
    transimpedance: f64,
    electronic_floor_db_below_snl: f64,
    /// Defaults to the twin-beam power at the configured seed power.
    reference_power: Option<f64>,
}

impl Default for DetectorSection {
    fn default() -> Self {
        let d = DetectorModel::default();
        Self {
            transimpedance: d.transimpedance,
            electronic_floor_db_below_snl: d.electronic_floor_db_below_snl,
            reference_power: None,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct AnalyzerSection {
    rbw: f64,
    vbw: f64,
    f_start: f64,
    f_stop: f64,
    sample_rate: f64,
    samples_log2: u32,
}

impl Default for AnalyzerSection {
    fn default() -> Self {
        let s = AnalyzerSettings::default();
        Self {
            rbw: s.rbw,
            vbw: s.vbw,
            f_start: s.f_start,
            f_stop: s.f_stop,
            sample_rate: s.sample_rate,
            samples_log2: 23,
        }
    }
}

impl AnalyzerSection {
    fn settings(&self) -> AnalyzerSettings {
        AnalyzerSettings {
            rbw: self.rbw,
            vbw: self.vbw,
            f_start: self.f_start,
            f_stop: self.f_stop,
            sample_rate: self.sample_rate,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumOptions {
    /// Level that delimits the squeezing bandwidth, dB relative to the SNL.
    pub bandwidth_threshold_db: f64,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        Self {
            bandwidth_threshold_db: 0.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct PowerScanSection {
    seed_powers: Vec<f64>,
    analysis_freq: f64,
    snl_analysis_freq: Option<f64>,
    band_half_width: f64,
    samples_log2: u32,
}

impl Default for PowerScanSection {
    fn default() -> Self {
        Self {
            seed_powers: vec![50e-6, 100e-6, 150e-6, 200e-6, 250e-6],
            analysis_freq: 1e6,
            snl_analysis_freq: None,
            band_half_width: 20e3,
            samples_log2: 20,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct SweepSection {
    axis: String,
    /// `[start, stop, step]`
    grid: Option<[f64; 3]>,
    analysis_freq: f64,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            axis: "temperature".into(),
            grid: None,
            analysis_freq: 1e6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BeatOptions {
    pub span: f64,
    pub rbw: f64,
}

impl Default for BeatOptions {
    fn default() -> Self {
        Self { span: 20e6, rbw: 30e3 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerScanOptions {
    pub seed_powers: Vec<f64>,
    /// Twin-beam analysis frequency, Hz.
    pub analysis_freq: f64,
    /// Coherent-reference analysis frequency, Hz.
    pub snl_analysis_freq: f64,
    /// Analyzer bins within this distance of the analysis frequency are
    /// averaged, Hz.
    pub band_half_width: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOptions {
    pub axis: SweepAxis,
    pub grid: Vec<f64>,
    pub analysis_freq: f64,
}

/// A fully resolved and validated experiment description.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub path: PathBuf,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub setup: Setup,
    pub detector: DetectorModel,
    pub analyzer: AnalyzerSettings,
    /// Samples per analyzer trace.
    pub samples: usize,
    pub spectrum: SpectrumOptions,
    pub power_scan: PowerScanOptions,
    pub sweep: SweepOptions,
    pub beat: BeatOptions,
}

impl ExperimentConfig {
    /// Trace duration at the analyzer sample rate, s.
    pub fn duration(&self) -> f64 {
        self.samples as f64 / self.analyzer.sample_rate
    }

    /// Replaces the sweep axis and/or grid, as from command-line flags.
    pub fn with_sweep(mut self, axis: Option<&str>, grid: Option<&str>) -> Result<Self, ConfigError> {
        let flag_error = |message: String| ConfigError {
            file: self.path.clone(),
            line: None,
            message,
        };
        if let Some(name) = axis {
            self.sweep.axis = name.parse().map_err(|e: twinbeam_core::Error| flag_error(format!("--axis: {e}")))?;
            if grid.is_none() {
                self.sweep.grid = default_grid(self.sweep.axis);
            }
        }
        if let Some(spec) = grid {
            let g = parse_grid(spec).map_err(|m| flag_error(format!("--grid: {m}")))?;
            self.sweep.grid = g;
        }
        check_sweep_grid(&self.setup, &self.sweep).map_err(|m| flag_error(format!("--grid: {m}")))?;
        Ok(self)
    }
}

/// Parses `start:stop:step`.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("expected start:stop:step, got '{spec}'"));
    }
    let mut v = [0.0; 3];
    for (slot, p) in v.iter_mut().zip(&parts) {
        *slot = p.trim().parse().map_err(|_| format!("'{p}' is not a number"))?;
    }
    linear_grid(v[0], v[1], v[2]).map_err(|e| e.to_string())
}

/// Default sweep grid of each axis.
pub fn default_grid(axis: SweepAxis) -> Vec<f64> {
    let (a, b, s) = match axis {
        SweepAxis::Pump => (0.1, 0.6, 0.05),
        SweepAxis::Delta1 => (0.8e9, 3.7e9, 0.1e9),
        SweepAxis::Delta2 => (-44e6, 48e6, 4e6),
        SweepAxis::Temperature => (98.0, 117.0, 1.0),
    };
    linear_grid(a, b, s).expect("static grid")
}

fn check_sweep_grid(setup: &Setup, sweep: &SweepOptions) -> Result<(), String> {
    for &v in &sweep.grid {
        sweep
            .axis
            .apply(&setup.medium, v)
            .validate()
            .map_err(|e| format!("{} = {v} {}: {e}", sweep.axis, sweep.axis.unit()))?;
    }
    Ok(())
}

fn err_string(e: twinbeam_core::Error) -> String {
    e.to_string()
}

/// Loads and validates an experiment config. Relative calibration paths are
/// taken from the config's directory.
pub fn load_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = read(path)?;
    let doc = Doc { path, text: &text };
    let file: ConfigFile = doc.parse()?;
    let raw: toml::Table = doc.parse()?;
    let section = |name: &str| raw.get(name).and_then(|v| v.as_table());
    check_schema(&doc, &file.schema, CONFIG_SCHEMA)?;

    let base_source = ProbeSource::preset(&file.source.preset)
        .map_err(|e| doc.at(Some("source"), Some("preset"), err_string(e)))?;
    let mut source = base_source;
    if let Some(fwhm) = file.source.beat_fwhm {
        source = source.with_beat_fwhm(fwhm);
    }
    if let Some(db) = file.source.excess_noise_db {
        match &mut source {
            ProbeSource::PhaseLockedLoop { excess_noise_db, .. } => *excess_noise_db = db,
            _ => {
                return Err(doc.at(
                    Some("source"),
                    Some("excess_noise_db"),
                    "[source] excess_noise_db only applies to the pll preset",
                ))
            }
        }
    }
    source.validate().map_err(|e| {
        let key = if file.source.beat_fwhm.is_some() { "beat_fwhm" } else { "excess_noise_db" };
        doc.at(Some("source"), Some(key), format!("[source] {e}"))
    })?;

    let preset = SpectralShapePreset::for_source(&source);
    let shape = SpectralShapePreset {
        low_corner: file.shape.low_corner.unwrap_or(preset.low_corner),
        high_corner: file.shape.high_corner.unwrap_or(preset.high_corner),
        classical_excess: file.shape.classical_excess.unwrap_or(preset.classical_excess),
    };
    shape
        .validate()
        .map_err(|e| doc.at(Some("shape"), None, format!("[shape] {e}")))?;

    check_section(&doc, "medium", section("medium"), &file.medium, |m: &MediumParams| {
        m.validate().map_err(err_string)
    })?;
    check_section(&doc, "losses", section("losses"), &file.losses, |l: &LossBudget| {
        l.validate().map_err(err_string)
    })?;
    check_section(&doc, "twin", section("twin"), &file.twin, |t: &TwinSection| {
        if let Some(p) = t.seed_power {
            if !(p > 0.0 && p.is_finite()) {
                return Err(format!("seed_power must be > 0 W, got {p}"));
            }
        }
        if let Some(g) = t.gain_override {
            if !(g >= 1.0 && g.is_finite()) {
                return Err(format!("gain_override must be >= 1, got {g}"));
            }
        }
        Ok(())
    })?;
    check_section(&doc, "analyzer", section("analyzer"), &file.analyzer, |a: &AnalyzerSection| {
        let s = a.settings();
        if !(s.rbw > 0.0 && s.vbw > 0.0 && s.sample_rate > 0.0) {
            return Err("rbw, vbw and sample_rate must be > 0".into());
        }
        if !(s.f_start >= 0.0 && s.f_stop > s.f_start && s.f_stop <= 0.5 * s.sample_rate) {
            return Err(format!(
                "need 0 <= f_start < f_stop <= sample_rate/2, got f_start {}, f_stop {}",
                s.f_start, s.f_stop
            ));
        }
        if !(16..=26).contains(&a.samples_log2) {
            return Err(format!("samples_log2 must lie in [16, 26], got {}", a.samples_log2));
        }
        Ok(())
    })?;

    let calibration_path = path.parent().unwrap_or(Path::new(".")).join(&file.calibration);
    let calibration = load_calibration(&calibration_path)
        .map_err(|e| doc.at(None, Some("calibration"), format!("calibration: {e}")))?;

    let setup = Setup {
        medium: file.medium,
        calibration,
        losses: file.losses,
        source,
        shape,
        seed_power: file.twin.seed_power.unwrap_or(DEFAULT_SEED_POWER),
        gain_override: file.twin.gain_override,
    };
    let response = setup
        .response_at(setup.medium.delta_two)
        .map_err(|e| doc.at(Some("medium"), None, format!("[medium] operating point: {e}")))?;
    let model = response
        .twin_model(setup.seed_power, &setup.losses)
        .map_err(|e| doc.at(Some("twin"), None, format!("[twin] {e}")))?;

    let mut detector = DetectorModel {
        quantum_efficiency: file.losses.quantum_efficiency,
        transimpedance: file.detector.transimpedance,
        electronic_floor_db_below_snl: file.detector.electronic_floor_db_below_snl,
        reference_power: 1.0,
    };
    detector.reference_power = file
        .detector
        .reference_power
        .unwrap_or_else(|| twin_optical_power(&model, &detector));
    check_section(&doc, "detector", section("detector"), &file.detector, |d: &DetectorSection| {
        DetectorModel {
            quantum_efficiency: file.losses.quantum_efficiency,
            transimpedance: d.transimpedance,
            electronic_floor_db_below_snl: d.electronic_floor_db_below_snl,
            reference_power: d.reference_power.unwrap_or(1e-3),
        }
        .validate()
        .map_err(err_string)
    })?;

    check_section(&doc, "spectrum", section("spectrum"), &file.spectrum, |s: &SpectrumOptions| {
        if !s.bandwidth_threshold_db.is_finite() {
            return Err("bandwidth_threshold_db must be finite".into());
        }
        Ok(())
    })?;

    let nyquist = 0.5 * file.analyzer.sample_rate;
    check_section(&doc, "power_scan", section("power_scan"), &file.power_scan, |p: &PowerScanSection| {
        if p.seed_powers.len() < 3 {
            return Err(format!("seed_powers needs at least 3 entries, got {}", p.seed_powers.len()));
        }
        if let Some(bad) = p.seed_powers.iter().find(|&&x| !(x > 0.0 && x.is_finite())) {
            return Err(format!("seed_powers must all be > 0 W, got {bad}"));
        }
        for f in [Some(p.analysis_freq), p.snl_analysis_freq].into_iter().flatten() {
            if !(f > p.band_half_width && f + p.band_half_width < nyquist) {
                return Err(format!("analysis frequency {f} Hz does not fit inside (0, {nyquist}) Hz"));
            }
        }
        if !(p.band_half_width >= 0.0) {
            return Err("band_half_width must be >= 0".into());
        }
        if !(16..=26).contains(&p.samples_log2) {
            return Err(format!("samples_log2 must lie in [16, 26], got {}", p.samples_log2));
        }
        Ok(())
    })?;

    let axis: SweepAxis = file
        .sweep
        .axis
        .parse()
        .map_err(|e| doc.at(Some("sweep"), Some("axis"), format!("[sweep] {e}")))?;
    let grid = match file.sweep.grid {
        Some([a, b, s]) => {
            linear_grid(a, b, s).map_err(|e| doc.at(Some("sweep"), Some("grid"), format!("[sweep] {e}")))?
        }
        None => default_grid(axis),
    };
    let sweep = SweepOptions {
        axis,
        grid,
        analysis_freq: file.sweep.analysis_freq,
    };
    check_sweep_grid(&setup, &sweep).map_err(|m| doc.at(Some("sweep"), Some("grid"), format!("[sweep] {m}")))?;
    if !(sweep.analysis_freq > 0.0) {
        return Err(doc.at(Some("sweep"), Some("analysis_freq"), "[sweep] analysis_freq must be > 0"));
    }

    check_section(&doc, "beat", section("beat"), &file.beat, |b: &BeatOptions| {
        if !(b.rbw > 0.0 && b.span > b.rbw) {
            return Err(format!("need span > rbw > 0, got span {}, rbw {}", b.span, b.rbw));
        }
        Ok(())
    })?;

    let scan = file.power_scan;
    Ok(ExperimentConfig {
        path: path.to_path_buf(),
        seed: file.seed,
        out_dir: PathBuf::from(file.out_dir.unwrap_or_else(|| "out".into())),
        setup,
        detector,
        analyzer: file.analyzer.settings(),
        samples: 1usize << file.analyzer.samples_log2,
        spectrum: file.spectrum,
        power_scan: PowerScanOptions {
            seed_powers: scan.seed_powers,
            analysis_freq: scan.analysis_freq,
            snl_analysis_freq: scan.snl_analysis_freq.unwrap_or(scan.analysis_freq),
            band_half_width: scan.band_half_width,
            samples: 1usize << scan.samples_log2,
        },
        sweep,
        beat: file.beat,
    })
}

#[derive(Serialize)]
struct CalibrationHeader<'a> {
    schema: &'a str,
}

/// Serialized calibration file; the exact bytes `calibrate` writes.
pub fn calibration_to_string(cal: &MediumCalibration) -> String {
    let header = toml::to_string(&CalibrationHeader {
        schema: CALIBRATION_SCHEMA,
    })
    .expect("static header");
    let body = toml::to_string(cal).expect("calibration serializes");
    format!("{header}{body}")
}

pub fn load_calibration(path: &Path) -> Result<MediumCalibration, ConfigError> {
    let text = read(path)?;
    let doc = Doc { path, text: &text };
    let mut table: toml::Table = doc.parse()?;
    let schema = match table.remove("schema") {
        Some(toml::Value::String(s)) => s,
        _ => return Err(doc.at(None, None, "missing string key 'schema'")),
    };
    check_schema(&doc, &schema, CALIBRATION_SCHEMA)?;
    let cal: MediumCalibration = toml::Value::Table(table).try_into().map_err(|e: toml::de::Error| {
        let message = e.message().trim().to_string();
        let key = message.split('`').nth(1).map(str::to_string);
        doc.at(None, key.as_deref(), message)
    })?;
    cal.validate().map_err(|e| {
        let msg = e.to_string();
        let key = ["gamma_2", "delta_asym", "detuning_width", "abs_strength", "xs_delta", "xs_temp_threshold", "xs_temp", "ref_pump_power", "ref_temperature", "ref_delta_one", "ref_cell_length", "g0"]
            .into_iter()
            .find(|k| msg.contains(k));
        doc.at(None, key, msg)
    })?;
    Ok(cal)
}

/// The operating point and squeezing level the gain is fitted to.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Anchor {
    pub squeezing_db: f64,
    pub analysis_freq: f64,
    pub preset: String,
}

/// Detuning and temperature constraints on where the squeezing optimum sits.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShapeTargets {
    /// `[start, stop, step]`, Hz.
    pub delta_two_grid: [f64; 3],
    pub delta_two_optimum: f64,
    /// `[start, stop, step]`, °C.
    pub temperature_grid: [f64; 3],
    pub temperature_optimum: f64,
    /// Excess-noise coefficients are set to this multiple of the smallest
    /// value that satisfies the optimum constraint.
    pub margin: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TargetsFile {
    schema: String,
    anchor: Anchor,
    shape: ShapeTargets,
    start: MediumCalibration,
    #[serde(default)]
    medium: MediumParams,
    #[serde(default)]
    losses: LossBudget,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Targets {
    pub path: PathBuf,
    pub anchor: Anchor,
    pub source: ProbeSource,
    pub shape: ShapeTargets,
    pub start: MediumCalibration,
    pub medium: MediumParams,
    pub losses: LossBudget,
    pub delta_two_grid: Vec<f64>,
    pub temperature_grid: Vec<f64>,
}

pub fn load_targets(path: &Path) -> Result<Targets, ConfigError> {
    let text = read(path)?;
    let doc = Doc { path, text: &text };
    let file: TargetsFile = doc.parse()?;
    check_schema(&doc, &file.schema, TARGETS_SCHEMA)?;
    let source = ProbeSource::preset(&file.anchor.preset)
        .map_err(|e| doc.at(Some("anchor"), Some("preset"), err_string(e)))?;
    if !file.anchor.squeezing_db.is_finite() || file.anchor.squeezing_db > 0.0 {
        return Err(doc.at(
            Some("anchor"),
            Some("squeezing_db"),
            format!("[anchor] squeezing_db must be <= 0 dB, got {}", file.anchor.squeezing_db),
        ));
    }
    if !(file.anchor.analysis_freq > 0.0) {
        return Err(doc.at(Some("anchor"), Some("analysis_freq"), "[anchor] analysis_freq must be > 0"));
    }
    file.start
        .validate()
        .map_err(|e| doc.at(Some("start"), None, format!("[start] {e}")))?;
    file.medium
        .validate()
        .map_err(|e| doc.at(Some("medium"), None, format!("[medium] {e}")))?;
    file.losses
        .validate()
        .map_err(|e| doc.at(Some("losses"), None, format!("[losses] {e}")))?;
    let grid = |key: &str, g: [f64; 3]| {
        linear_grid(g[0], g[1], g[2]).map_err(|e| doc.at(Some("shape"), Some(key), format!("[shape] {e}")))
    };
    let delta_two_grid = grid("delta_two_grid", file.shape.delta_two_grid)?;
    let temperature_grid = grid("temperature_grid", file.shape.temperature_grid)?;
    if !(file.shape.margin >= 1.0) {
        return Err(doc.at(Some("shape"), Some("margin"), "[shape] margin must be >= 1"));
    }
    for (key, value, g) in [
        ("delta_two_optimum", file.shape.delta_two_optimum, &delta_two_grid),
        ("temperature_optimum", file.shape.temperature_optimum, &temperature_grid),
    ] {
        if !(g[0]..=g[g.len() - 1]).contains(&value) {
            return Err(doc.at(Some("shape"), Some(key), format!("[shape] {key} {value} lies outside its grid")));
        }
    }
    for &t in &temperature_grid {
        MediumParams {
            temperature: t,
            ..file.medium
        }
        .validate()
        .map_err(|e| doc.at(Some("shape"), Some("temperature_grid"), format!("[shape] {e}")))?;
    }
    Ok(Targets {
        path: path.to_path_buf(),
        anchor: file.anchor,
        source,
        shape: file.shape,
        start: file.start,
        medium: file.medium,
        losses: file.losses,
        delta_two_grid,
        temperature_grid,
    })
}
