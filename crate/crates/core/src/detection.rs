//! Balanced detection of twin beams and coherent references, and a
//! spectrum-analyzer emulation (Welch periodogram + video smoothing).
//!
//! Photocurrent-difference traces are synthesized in the frequency domain:
//! complex Gaussian Fourier coefficients are scaled by the target one-sided
//! PSD and inverse-transformed, so the trace has the requested spectrum by
//! construction.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use realfft::num_complex::Complex;
use realfft::{RealFftPlanner, RealToComplex};
use serde::{Deserialize, Serialize};

use crate::constants::*;
use crate::error::{domain, invalid, Error, Result};
use crate::noise::{from_db, lossy_noise_ratio, to_db, TwinBeamModel};
use crate::seed::stage_seed;
use crate::source::{pll_excess_noise_db, ProbeSource};
use crate::spectrum::{check_same_grid, NoiseSpectrum};

/// Traces shorter than this are rejected by the synthesizer.
pub const MIN_TRACE_SAMPLES: usize = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorModel {
    pub quantum_efficiency: f64,
    /// V/A
    pub transimpedance: f64,
    /// Electronic floor below the SNL of `reference_power`, dB.
    pub electronic_floor_db_below_snl: f64,
    /// Optical power on the detector that defines the floor level, W.
    pub reference_power: f64,
}

impl Default for DetectorModel {
    fn default() -> Self {
        Self {
            quantum_efficiency: DETECTOR_QE,
            transimpedance: DETECTOR_TRANSIMPEDANCE,
            electronic_floor_db_below_snl: ELECTRONIC_FLOOR_DB_BELOW_SNL,
            reference_power: 1e-3,
        }
    }
}

impl DetectorModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.quantum_efficiency > 0.0 && self.quantum_efficiency <= 1.0) {
            return Err(domain(format!(
                "quantum efficiency must lie in (0, 1], got {}",
                self.quantum_efficiency
            )));
        }
        if !(self.transimpedance > 0.0 && self.transimpedance.is_finite()) {
            return Err(domain("transimpedance must be > 0"));
        }
        if !(self.reference_power > 0.0 && self.reference_power.is_finite()) {
            return Err(domain("reference power must be > 0"));
        }
        if !self.electronic_floor_db_below_snl.is_finite() {
            return Err(domain("electronic floor level must be finite"));
        }
        Ok(())
    }

    /// Photocurrent per optical watt, A/W.
    pub fn responsivity(&self) -> f64 {
        self.quantum_efficiency * photocurrent_per_detected_watt()
    }

    /// One-sided shot-noise PSD of the balanced output for `power` watts of
    /// coherent light on the detector, V²/Hz.
    pub fn shot_psd(&self, power: f64) -> f64 {
        2.0 * ELEMENTARY_CHARGE * self.responsivity() * power * self.transimpedance.powi(2)
    }

    /// White electronic-noise PSD, V²/Hz.
    pub fn floor_psd(&self) -> f64 {
        self.shot_psd(self.reference_power) * from_db(-self.electronic_floor_db_below_snl)
    }
}

/// Photocurrent per watt of light absorbed with unit efficiency, A/W.
pub fn photocurrent_per_detected_watt() -> f64 {
    ELEMENTARY_CHARGE * CS_D1_WAVELENGTH / (PLANCK * SPEED_OF_LIGHT)
}

/// Optical power of the probe + conjugate pair arriving at the detector, W.
pub fn twin_optical_power(model: &TwinBeamModel, detector: &DetectorModel) -> f64 {
    let (p, c) = model.detected_fractions();
    (p + c) * model.seed_power / detector.quantum_efficiency
}

/// Frequency dependence of the squeezing seen at the analyzer.
///
/// The retained fraction of the noise reduction is
/// `m(f) = f²/(f² + f_lo²) · 1/(1 + (f/f_hi)²)`; above `f_hi` the uncancelled
/// classical laser noise adds `excess · (1 - 1/(1 + (f/f_hi)²))`, so the
/// multiplier is `s(f) = m(f) - excess · (1 - 1/(1 + (f/f_hi)²))` and the
/// normalized noise is `1 - s(f) (1 - V)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectralShapePreset {
    /// Technical-noise corner, Hz.
    pub low_corner: f64,
    /// Roll-off corner, Hz.
    pub high_corner: f64,
    /// Classical noise above the roll-off, in units of the noise reduction.
    pub classical_excess: f64,
}

impl SpectralShapePreset {
    pub const INDEPENDENT: Self = Self {
        low_corner: 87.706_777e3,
        high_corner: 1.980_057_7e6,
        classical_excess: 7.452_356,
    };
    pub const PLL: Self = Self {
        low_corner: 43.494_742e3,
        high_corner: 1.216_239e6,
        classical_excess: 0.0,
    };
    pub const EOM: Self = Self {
        low_corner: 0.1e6,
        high_corner: 10e6,
        classical_excess: 0.0,
    };
    /// No frequency dependence: `s(f) = 1`.
    pub const FLAT: Self = Self {
        low_corner: 0.0,
        high_corner: f64::INFINITY,
        classical_excess: 0.0,
    };

    pub fn for_source(source: &ProbeSource) -> Self {
        match source {
            ProbeSource::IndependentLasers { .. } => Self::INDEPENDENT,
            ProbeSource::PhaseLockedLoop { .. } => Self::PLL,
            ProbeSource::EomSideband { .. } => Self::EOM,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.low_corner >= 0.0 && self.high_corner > self.low_corner) {
            return Err(domain(format!(
                "shape corners must satisfy 0 <= low < high, got ({}, {})",
                self.low_corner, self.high_corner
            )));
        }
        if !(self.classical_excess >= 0.0 && self.classical_excess.is_finite()) {
            return Err(domain("classical excess must be finite and >= 0"));
        }
        Ok(())
    }

    fn roll_off(&self, f: f64) -> f64 {
        if self.high_corner.is_infinite() {
            1.0
        } else {
            1.0 / (1.0 + (f / self.high_corner).powi(2))
        }
    }

    /// Retained fraction of the noise reduction, in [0, 1].
    pub fn retention(&self, f: f64) -> f64 {
        let high_pass = if self.low_corner == 0.0 {
            1.0
        } else {
            f * f / (f * f + self.low_corner * self.low_corner)
        };
        high_pass * self.roll_off(f)
    }

    pub fn multiplier(&self, f: f64) -> f64 {
        self.retention(f) - self.classical_excess * (1.0 - self.roll_off(f))
    }
}

/// A classical noise tone (laser spike) injected into a trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tone {
    pub freq: f64,
    /// Tone power relative to the SNL power in one RBW, linear.
    pub power_rel_snl: f64,
}

/// Everything needed to predict the normalized intensity-difference spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct TwinBeamReadout {
    pub model: TwinBeamModel,
    /// Normalized noise at the optimum analysis frequency before spectral
    /// shaping (losses, medium excess noise and jitter included).
    pub base_noise: f64,
    pub source: ProbeSource,
    pub preset: SpectralShapePreset,
    pub tones: Vec<Tone>,
}

impl TwinBeamReadout {
    /// Readout whose base noise is the lossy twin-beam value of `model`.
    pub fn from_model(model: TwinBeamModel, source: ProbeSource, preset: SpectralShapePreset) -> Result<Self> {
        let base_noise = lossy_noise_ratio(&model)?.linear;
        Ok(Self {
            model,
            base_noise,
            source,
            preset,
            tones: Vec::new(),
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.source.validate()?;
        self.preset.validate()?;
        if !(self.base_noise.is_finite() && self.base_noise > 0.0) {
            return Err(domain(format!("base noise must be > 0, got {}", self.base_noise)));
        }
        Ok(())
    }

    /// Expected normalized noise (linear, relative to the SNL) at `f`.
    pub fn normalized_noise(&self, f: f64) -> f64 {
        let n = 1.0 - self.preset.multiplier(f) * (1.0 - self.base_noise);
        n * from_db(pll_excess_noise_db(&self.source, f))
    }

    /// Highest frequency with structure that must be resolved: the PLL
    /// excess band and injected tones. The roll-off corner may lie past
    /// Nyquist, since the trace is synthesized in the frequency domain and
    /// nothing above Nyquist folds back.
    fn feature_frequency(&self) -> f64 {
        let mut f = self.preset.low_corner;
        if let ProbeSource::PhaseLockedLoop {
            excess_noise_band: (_, hi),
            ..
        } = self.source
        {
            f = f.max(hi);
        }
        self.tones.iter().fold(f, |f, t| f.max(t.freq))
    }
}

/// Generates `n` samples of a stationary Gaussian process with one-sided PSD
/// `psd(f)` at `sample_rate`.
pub fn synthesize_psd(psd: impl Fn(f64) -> f64, n: usize, sample_rate: f64, rng_seed: u64) -> Result<Vec<f64>> {
    if n < MIN_TRACE_SAMPLES || n % 2 != 0 {
        return Err(invalid(format!(
            "trace needs an even length >= {MIN_TRACE_SAMPLES}, got {n}"
        )));
    }
    let mut planner = RealFftPlanner::<f64>::new();
    let c2r = planner.plan_fft_inverse(n);
    let mut spec = c2r.make_input_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let df = sample_rate / n as f64;
    let nf = n as f64;
    let half = n / 2;
    for (k, c) in spec.iter_mut().enumerate() {
        let s = psd(k as f64 * df);
        if !(s >= 0.0 && s.is_finite()) {
            return Err(invalid(format!("PSD must be finite and >= 0, got {s} at {} Hz", k as f64 * df)));
        }
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        *c = if k == 0 || k == half {
            Complex::new((nf * sample_rate * s / 2.0).sqrt() * re, 0.0)
        } else {
            let a = (nf * sample_rate * s / 4.0).sqrt();
            Complex::new(a * re, a * im)
        };
    }
    let mut out = c2r.make_output_vec();
    c2r.process(&mut spec, &mut out)
        .map_err(|e| invalid(format!("inverse FFT failed: {e}")))?;
    for x in out.iter_mut() {
        *x /= nf;
    }
    Ok(out)
}

fn trace_len(duration: f64, sample_rate: f64) -> Result<usize> {
    if !(duration > 0.0 && sample_rate > 0.0) {
        return Err(invalid("duration and sample rate must be positive"));
    }
    let n = (duration * sample_rate).round() as usize;
    Ok(n + n % 2)
}

/// Balanced-detector output voltage for the twin beams, V.
///
/// PSD = SNL(detected power) × normalized noise + electronic floor, plus any
/// injected tones.
pub fn synthesize_difference_trace(
    readout: &TwinBeamReadout,
    detector: &DetectorModel,
    duration: f64,
    sample_rate: f64,
    rng_seed: u64,
) -> Result<Vec<f64>> {
    readout.validate()?;
    detector.validate()?;
    let nyquist = 0.5 * sample_rate;
    if nyquist < readout.feature_frequency() {
        return Err(invalid(format!(
            "sample rate {sample_rate} Hz undersamples spectral features up to {} Hz",
            readout.feature_frequency()
        )));
    }
    let n = trace_len(duration, sample_rate)?;
    let snl = detector.shot_psd(twin_optical_power(&readout.model, detector));
    let floor = detector.floor_psd();
    let mut trace = synthesize_psd(|f| snl * readout.normalized_noise(f) + floor, n, sample_rate, rng_seed)?;
    add_tones(&mut trace, &readout.tones, snl, sample_rate, rng_seed)?;
    Ok(trace)
}

fn add_tones(trace: &mut [f64], tones: &[Tone], snl_psd: f64, sample_rate: f64, rng_seed: u64) -> Result<()> {
    if tones.is_empty() {
        return Ok(());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(stage_seed(rng_seed, "tones"));
    for t in tones {
        if !(t.freq > 0.0 && t.freq < 0.5 * sample_rate && t.power_rel_snl >= 0.0) {
            return Err(invalid(format!("bad tone {t:?}")));
        }
        // sine power A²/2 equal to power_rel_snl × SNL PSD × 30 kHz
        let amp = (2.0 * t.power_rel_snl * snl_psd * ANALYZER_RBW).sqrt();
        let phase: f64 = rng.gen_range(0.0..2.0 * PI);
        let w = 2.0 * PI * t.freq / sample_rate;
        for (i, x) in trace.iter_mut().enumerate() {
            *x += amp * (w * i as f64 + phase).sin();
        }
    }
    Ok(())
}

/// Coherent-beam reference trace: `total_power` split 50:50 onto the
/// balanced detector, V.
pub fn synthesize_coherent_trace(
    total_power: f64,
    detector: &DetectorModel,
    duration: f64,
    sample_rate: f64,
    rng_seed: u64,
) -> Result<Vec<f64>> {
    detector.validate()?;
    if !(total_power > 0.0 && total_power.is_finite()) {
        return Err(domain(format!("optical power must be > 0, got {total_power}")));
    }
    let n = trace_len(duration, sample_rate)?;
    let level = detector.shot_psd(total_power) + detector.floor_psd();
    synthesize_psd(|_| level, n, sample_rate, rng_seed)
}

/// Detector output with the light blocked, V.
pub fn synthesize_floor_trace(detector: &DetectorModel, duration: f64, sample_rate: f64, rng_seed: u64) -> Result<Vec<f64>> {
    detector.validate()?;
    let n = trace_len(duration, sample_rate)?;
    let level = detector.floor_psd();
    synthesize_psd(|_| level, n, sample_rate, rng_seed)
}

/// Spectrum-analyzer settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalyzerSettings {
    pub rbw: f64,
    pub vbw: f64,
    pub f_start: f64,
    pub f_stop: f64,
    pub sample_rate: f64,
}

impl Default for AnalyzerSettings {
    fn default() -> Self {
        Self {
            rbw: ANALYZER_RBW,
            vbw: ANALYZER_VBW,
            f_start: 0.0,
            f_stop: 5e6,
            sample_rate: 12e6,
        }
    }
}

/// Sweep-time factor `k` in `T_sweep = k · span / (RBW · VBW)`.
const SWEEP_TIME_FACTOR: f64 = 2.5;
/// Batches used for standard errors of band powers.
const STDERR_BATCHES: usize = 16;

/// Welch estimator with a periodic Hann window and 50 % overlap, sized so
/// its equivalent noise bandwidth matches the requested RBW.
struct Welch {
    nperseg: usize,
    window: Vec<f64>,
    fft: Arc<dyn RealToComplex<f64>>,
    /// Converts |X|² to one-sided PSD.
    scale: f64,
    enbw: f64,
}

impl Welch {
    fn new(trace_len: usize, sample_rate: f64, rbw: f64) -> Result<Self> {
        if !(rbw > 0.0 && sample_rate > 0.0) {
            return Err(invalid("rbw and sample rate must be positive"));
        }
        let duration = trace_len as f64 / sample_rate;
        if rbw < 2.0 / duration {
            return Err(invalid(format!(
                "rbw {rbw} Hz is below 2/duration = {} Hz",
                2.0 / duration
            )));
        }
        let nperseg = (1.5 * sample_rate / rbw).round() as usize;
        if nperseg < 8 {
            return Err(invalid(format!("rbw {rbw} Hz is too wide for {sample_rate} Hz sampling")));
        }
        let segments = segment_count(trace_len, nperseg);
        if segments < 10 {
            return Err(invalid(format!(
                "trace too short: {segments} segments at rbw {rbw} Hz, need >= 10"
            )));
        }
        let window: Vec<f64> = (0..nperseg)
            .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / nperseg as f64).cos())
            .collect();
        let s1: f64 = window.iter().sum();
        let s2: f64 = window.iter().map(|w| w * w).sum();
        let mut planner = RealFftPlanner::<f64>::new();
        Ok(Self {
            nperseg,
            fft: planner.plan_fft_forward(nperseg),
            scale: 2.0 / (sample_rate * s2),
            enbw: sample_rate * s2 / (s1 * s1),
            window,
        })
    }

    fn bin_width(&self, sample_rate: f64) -> f64 {
        sample_rate / self.nperseg as f64
    }

    /// Calls `f` with the one-sided periodogram of every segment.
    fn for_each_segment(&self, trace: &[f64], mut f: impl FnMut(&[f64])) -> Result<()> {
        let hop = self.nperseg / 2;
        let mut input = self.fft.make_input_vec();
        let mut output = self.fft.make_output_vec();
        let mut psd = vec![0.0; output.len()];
        let last = output.len() - 1;
        let mut start = 0;
        while start + self.nperseg <= trace.len() {
            let seg = &trace[start..start + self.nperseg];
            let mean = seg.iter().sum::<f64>() / self.nperseg as f64;
            for ((x, s), w) in input.iter_mut().zip(seg).zip(&self.window) {
                *x = (s - mean) * w;
            }
            self.fft
                .process(&mut input, &mut output)
                .map_err(|e| invalid(format!("FFT failed: {e}")))?;
            for (k, (p, c)) in psd.iter_mut().zip(&output).enumerate() {
                let edge = k == 0 || (k == last && self.nperseg % 2 == 0);
                *p = c.norm_sqr() * self.scale * if edge { 0.5 } else { 1.0 };
            }
            f(&psd);
            start += hop;
        }
        Ok(())
    }
}

fn segment_count(len: usize, nperseg: usize) -> usize {
    if len < nperseg {
        0
    } else {
        (len - nperseg) / (nperseg / 2) + 1
    }
}

fn dbm_in_rbw(psd: f64, enbw: f64) -> f64 {
    to_db(psd * enbw / ANALYZER_IMPEDANCE / 1e-3)
}

fn check_band(settings: &AnalyzerSettings) -> Result<()> {
    if !(settings.f_start >= 0.0 && settings.f_stop > settings.f_start) {
        return Err(invalid(format!(
            "bad analyzer span [{}, {}]",
            settings.f_start, settings.f_stop
        )));
    }
    if settings.f_stop > 0.5 * settings.sample_rate {
        return Err(invalid(format!(
            "span stop {} Hz exceeds Nyquist {} Hz: undersampled",
            settings.f_stop,
            0.5 * settings.sample_rate
        )));
    }
    if !(settings.vbw > 0.0) {
        return Err(invalid("vbw must be positive"));
    }
    Ok(())
}

/// One-sided Welch PSD (V²/Hz) of `trace` on the analyzer bins.
pub fn welch_psd(trace: &[f64], settings: &AnalyzerSettings) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    check_band(settings)?;
    let welch = Welch::new(trace.len(), settings.sample_rate, settings.rbw)?;
    let df = welch.bin_width(settings.sample_rate);
    let first = ((settings.f_start / df).ceil() as usize).max(1);
    let last = (settings.f_stop / df).floor() as usize;
    if first > last {
        return Err(invalid("analyzer span contains no frequency bins"));
    }
    let mut acc = vec![0.0; last - first + 1];
    let mut count = 0usize;
    welch.for_each_segment(trace, |p| {
        for (a, v) in acc.iter_mut().zip(&p[first..=last]) {
            *a += v;
        }
        count += 1;
    })?;
    let freqs = (first..=last).map(|k| k as f64 * df).collect();
    let psd = acc.into_iter().map(|a| a / count as f64).collect();
    Ok((freqs, psd, welch.enbw))
}

/// First-order video filter swept across the points in log power, run
/// forward and backward so it does not shift features.
fn video_smooth(db: &mut [f64], grid_step: f64, rbw: f64) {
    // the filter time constant maps to rbw / (2π k) of sweep
    let alpha = 1.0 - (-2.0 * PI * SWEEP_TIME_FACTOR * grid_step / rbw).exp();
    for i in 1..db.len() {
        db[i] = db[i - 1] + alpha * (db[i] - db[i - 1]);
    }
    for i in (0..db.len().saturating_sub(1)).rev() {
        db[i] = db[i + 1] + alpha * (db[i] - db[i + 1]);
    }
}

/// Spectrum-analyzer trace of a voltage time series, in dBm per RBW (50 Ω).
pub fn spectrum_analyzer(trace: &[f64], settings: &AnalyzerSettings) -> Result<NoiseSpectrum> {
    let (freqs, psd, enbw) = welch_psd(trace, settings)?;
    if psd.iter().any(|&p| !(p > 0.0)) {
        return Err(invalid("trace has no power in the analyzer span"));
    }
    let step = if freqs.len() > 1 { freqs[1] - freqs[0] } else { enbw };
    let mut db: Vec<f64> = psd.iter().map(|&p| dbm_in_rbw(p, enbw)).collect();
    video_smooth(&mut db, step, enbw);
    NoiseSpectrum::new(freqs, db, enbw, settings.vbw)
}

/// Mean PSD over `[f_lo, f_hi]` with its standard error from batch means.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandPower {
    pub psd: f64,
    pub stderr: f64,
}

pub fn band_power(trace: &[f64], settings: &AnalyzerSettings, f_lo: f64, f_hi: f64) -> Result<BandPower> {
    check_band(settings)?;
    let welch = Welch::new(trace.len(), settings.sample_rate, settings.rbw)?;
    let df = welch.bin_width(settings.sample_rate);
    let first = ((f_lo / df).ceil() as usize).max(1);
    let last = (f_hi / df).floor() as usize;
    if first > last || f_hi > 0.5 * settings.sample_rate {
        return Err(invalid(format!("band [{f_lo}, {f_hi}] Hz contains no analyzer bins")));
    }
    let mut values = Vec::new();
    welch.for_each_segment(trace, |p| {
        let band = &p[first..=last];
        values.push(band.iter().sum::<f64>() / band.len() as f64);
    })?;
    let per_batch = values.len() / STDERR_BATCHES;
    if per_batch == 0 {
        return Err(invalid("too few segments for a standard error"));
    }
    let batches: Vec<f64> = values
        .chunks(per_batch)
        .take(STDERR_BATCHES)
        .map(|c| c.iter().sum::<f64>() / c.len() as f64)
        .collect();
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let bmean = batches.iter().sum::<f64>() / batches.len() as f64;
    let bvar = batches.iter().map(|b| (b - bmean).powi(2)).sum::<f64>() / (batches.len() - 1) as f64;
    Ok(BandPower {
        psd: mean,
        stderr: (bvar / batches.len() as f64).sqrt(),
    })
}

/// Analyzer spectrum of a coherent beam of `total_power` watts on the
/// balanced detector (electronic floor included).
pub fn snl_calibration(
    total_power: f64,
    detector: &DetectorModel,
    settings: &AnalyzerSettings,
    duration: f64,
    rng_seed: u64,
) -> Result<NoiseSpectrum> {
    let trace = synthesize_coherent_trace(total_power, detector, duration, settings.sample_rate, rng_seed)?;
    spectrum_analyzer(&trace, settings)
}

/// Linear-domain subtraction of a background trace.
pub fn subtract_background(spectrum: &NoiseSpectrum, floor: &NoiseSpectrum) -> Result<NoiseSpectrum> {
    check_same_grid(spectrum, floor)?;
    let mut out = Vec::with_capacity(spectrum.len());
    for ((&f, &s), &b) in spectrum.freqs.iter().zip(&spectrum.power_db).zip(&floor.power_db) {
        if b >= s {
            return Err(Error::NonPhysicalSubtraction {
                freq_hz: f,
                floor_db: b,
                trace_db: s,
            });
        }
        out.push(s + to_db(1.0 - from_db(b - s)));
    }
    Ok(NoiseSpectrum {
        freqs: spectrum.freqs.clone(),
        power_db: out,
        rbw: spectrum.rbw,
        vbw: spectrum.vbw,
        normalized: false,
        snl_reference: None,
    })
}

/// The three analyzer traces behind one normalized twin-beam spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasuredSpectrum {
    pub twin: NoiseSpectrum,
    pub snl: NoiseSpectrum,
    pub floor: NoiseSpectrum,
    /// Background-subtracted twin trace over background-subtracted SNL.
    pub normalized: NoiseSpectrum,
}

/// Measures the twin-beam spectrum, the SNL at matched power and the
/// electronic floor, then normalizes after background subtraction.
pub fn measure_twin_spectrum(
    readout: &TwinBeamReadout,
    detector: &DetectorModel,
    settings: &AnalyzerSettings,
    duration: f64,
    rng_seed: u64,
) -> Result<MeasuredSpectrum> {
    let power = twin_optical_power(&readout.model, detector);
    let twin_trace = synthesize_difference_trace(
        readout,
        detector,
        duration,
        settings.sample_rate,
        stage_seed(rng_seed, "twin"),
    )?;
    let twin = spectrum_analyzer(&twin_trace, settings)?;
    drop(twin_trace);
    let snl = snl_calibration(power, detector, settings, duration, stage_seed(rng_seed, "snl"))?;
    let floor_trace = synthesize_floor_trace(detector, duration, settings.sample_rate, stage_seed(rng_seed, "floor"))?;
    let floor = spectrum_analyzer(&floor_trace, settings)?;
    let normalized = subtract_background(&twin, &floor)?.normalize(&subtract_background(&snl, &floor)?)?;
    Ok(MeasuredSpectrum {
        twin,
        snl,
        floor,
        normalized,
    })
}
