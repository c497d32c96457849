//! Probe-generation methods: free-running lasers, a phase-locked diode, and
//! an EOM sideband selected by an etalon chain.
//!
//! Each method is reduced to its pump-probe beat linewidth (pure Wiener phase
//! noise, i.e. a Lorentzian line) plus, for the PLL, a band of excess
//! intensity noise from the current modulation.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::constants::*;
use crate::error::{domain, invalid, Error, Result};
use crate::noise::to_db;
use crate::spectrum::NoiseSpectrum;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProbeSource {
    IndependentLasers {
        beat_fwhm: f64,
    },
    PhaseLockedLoop {
        beat_fwhm: f64,
        ref_a: f64,
        ref_b: f64,
        excess_noise_band: (f64, f64),
        excess_noise_db: f64,
    },
    EomSideband {
        beat_fwhm: f64,
        mod_freq: f64,
        rf_power_dbm: f64,
        /// (-1 order, +1 order, carrier)
        sideband_fracs: (f64, f64, f64),
        etalon_finesse: f64,
        etalon_chain_transmissivity: f64,
    },
}

/// Default in-band PLL excess noise, dB above the twin-beam level.
pub const DEFAULT_PLL_EXCESS_DB: f64 = 8.0;

impl ProbeSource {
    pub const PRESETS: [&'static str; 3] = ["independent", "pll", "eom"];

    pub fn independent() -> Self {
        Self::IndependentLasers {
            beat_fwhm: INDEPENDENT_BEAT_FWHM,
        }
    }

    pub fn pll() -> Self {
        Self::PhaseLockedLoop {
            beat_fwhm: LOCKED_BEAT_FWHM,
            ref_a: PLL_REF_A,
            ref_b: PLL_REF_B,
            excess_noise_band: PLL_EXCESS_BAND,
            excess_noise_db: DEFAULT_PLL_EXCESS_DB,
        }
    }

    pub fn eom() -> Self {
        Self::EomSideband {
            beat_fwhm: LOCKED_BEAT_FWHM,
            mod_freq: EOM_MOD_FREQ,
            rf_power_dbm: EOM_RF_POWER_DBM,
            sideband_fracs: EOM_SIDEBAND_FRACS,
            etalon_finesse: ETALON_FINESSE,
            etalon_chain_transmissivity: ETALON_CHAIN_TRANSMISSIVITY,
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "independent" => Ok(Self::independent()),
            "pll" => Ok(Self::pll()),
            "eom" => Ok(Self::eom()),
            other => Err(invalid(format!(
                "unknown probe source preset '{other}', valid presets: {}",
                Self::PRESETS.join(", ")
            ))),
        }
    }

    pub fn preset_name(&self) -> &'static str {
        match self {
            Self::IndependentLasers { .. } => "independent",
            Self::PhaseLockedLoop { .. } => "pll",
            Self::EomSideband { .. } => "eom",
        }
    }

    pub fn beat_fwhm(&self) -> f64 {
        match *self {
            Self::IndependentLasers { beat_fwhm }
            | Self::PhaseLockedLoop { beat_fwhm, .. }
            | Self::EomSideband { beat_fwhm, .. } => beat_fwhm,
        }
    }

    pub fn with_beat_fwhm(mut self, fwhm: f64) -> Self {
        match &mut self {
            Self::IndependentLasers { beat_fwhm }
            | Self::PhaseLockedLoop { beat_fwhm, .. }
            | Self::EomSideband { beat_fwhm, .. } => *beat_fwhm = fwhm,
        }
        self
    }

    /// Nominal pump-probe beat frequency, Hz.
    pub fn beat_center(&self) -> f64 {
        match *self {
            Self::IndependentLasers { .. } => CS_GROUND_SPLITTING,
            Self::PhaseLockedLoop { ref_a, ref_b, .. } => ref_a + ref_b,
            Self::EomSideband { mod_freq, .. } => mod_freq,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fwhm = self.beat_fwhm();
        // zero linewidth is the noiseless-lock limit
        if !(fwhm.is_finite() && fwhm >= 0.0) {
            return Err(domain(format!("beat FWHM must be >= 0, got {fwhm}")));
        }
        match *self {
            Self::IndependentLasers { .. } => {}
            Self::PhaseLockedLoop {
                ref_a,
                ref_b,
                excess_noise_band: (lo, hi),
                excess_noise_db,
                ..
            } => {
                if !(ref_a > 0.0 && ref_b > 0.0) {
                    return Err(domain("PLL reference frequencies must be positive"));
                }
                if !(lo >= 0.0 && hi > lo) {
                    return Err(domain(format!("bad PLL excess band ({lo}, {hi})")));
                }
                if !(excess_noise_db.is_finite() && excess_noise_db >= 0.0) {
                    return Err(domain("PLL excess noise must be a finite, non-negative dB value"));
                }
            }
            Self::EomSideband {
                mod_freq,
                sideband_fracs: (m1, p1, c),
                etalon_finesse,
                etalon_chain_transmissivity,
                ..
            } => {
                if mod_freq <= 0.0 || etalon_finesse <= 0.0 {
                    return Err(domain("EOM modulation frequency and etalon finesse must be positive"));
                }
                if [m1, p1, c].iter().any(|f| !(0.0..=1.0).contains(f)) || m1 + p1 + c > 1.0 + 1e-12 {
                    return Err(domain(format!(
                        "sideband fractions ({m1}, {p1}, {c}) must be in [0, 1] and sum to <= 1"
                    )));
                }
                if !(etalon_chain_transmissivity > 0.0 && etalon_chain_transmissivity <= 1.0) {
                    return Err(domain("etalon chain transmissivity must lie in (0, 1]"));
                }
            }
        }
        Ok(())
    }
}

/// Beat note as seen on a spectrum analyzer: the Lorentzian line convolved
/// with a Gaussian resolution filter of FWHM `rbw`, peak normalized to 0 dB.
pub fn beat_spectrum(source: &ProbeSource, span: f64, rbw: f64) -> Result<NoiseSpectrum> {
    source.validate()?;
    if !(rbw > 0.0 && span > rbw) {
        return Err(invalid(format!("need span > rbw > 0, got span {span}, rbw {rbw}")));
    }
    let fwhm = source.beat_fwhm();
    let finest = if fwhm > 0.0 { fwhm.min(rbw) } else { rbw };
    let step_target = finest / 8.0;
    let n = ((span / step_target).ceil() as usize + 1).max(401) | 1;
    if n > 400_001 {
        return Err(invalid(format!(
            "span/resolution ratio too large ({} points needed)",
            n
        )));
    }
    let step = span / (n - 1) as f64;
    let center = source.beat_center();
    let offsets: Vec<f64> = (0..n).map(|i| -0.5 * span + i as f64 * step).collect();

    let sigma = rbw / (8.0 * 2f64.ln()).sqrt();
    let half = (4.0 * sigma / step).ceil() as i64;
    let kernel: Vec<(f64, f64)> = (-half..=half)
        .map(|k| {
            let x = k as f64 * step;
            (x, (-0.5 * (x / sigma).powi(2)).exp())
        })
        .collect();
    let ksum: f64 = kernel.iter().map(|k| k.1).sum();
    let hwhm = 0.5 * fwhm;
    // a zero-width line is a delta: the analyzer shows its filter shape
    let line = |x: f64| {
        if hwhm > 0.0 {
            hwhm * hwhm / (x * x + hwhm * hwhm)
        } else if x.abs() < 0.5 * step {
            1.0
        } else {
            0.0
        }
    };
    let power: Vec<f64> = offsets
        .iter()
        .map(|&f| kernel.iter().map(|&(x, w)| w * line(f - x)).sum::<f64>() / ksum)
        .collect();
    let peak = power.iter().cloned().fold(f64::MIN, f64::max);
    let freqs = offsets.iter().map(|o| center + o).collect();
    let db: Vec<f64> = power.iter().map(|p| to_db((p / peak).max(1e-300))).collect();
    NoiseSpectrum::new(freqs, db, rbw, rbw)
}

/// Time-domain realization of the two-photon detuning jitter.
#[derive(Debug, Clone, PartialEq)]
pub struct JitterSeries {
    pub dt: f64,
    /// Instantaneous detuning offsets δ(t), Hz.
    pub values: Vec<f64>,
}

impl JitterSeries {
    /// Accumulated beat phase, rad, starting at 0.
    pub fn phase(&self) -> Vec<f64> {
        let mut phi = 0.0;
        std::iter::once(0.0)
            .chain(self.values.iter().map(|d| {
                phi += 2.0 * PI * d * self.dt;
                phi
            }))
            .collect()
    }

    pub fn rms(&self) -> f64 {
        (self.values.iter().map(|v| v * v).sum::<f64>() / self.values.len() as f64).sqrt()
    }
}

/// Wiener phase walk with per-step variance `2π · FWHM · dt`.
pub fn jitter_series(source: &ProbeSource, duration: f64, dt: f64, rng_seed: u64) -> Result<JitterSeries> {
    source.validate()?;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(invalid(format!("dt must be > 0, got {dt}")));
    }
    let n = (duration / dt + 1e-9).floor();
    if !(n >= 100.0) {
        return Err(invalid(format!(
            "duration/dt = {} gives fewer than 100 samples",
            duration / dt
        )));
    }
    let fwhm = source.beat_fwhm();
    let sigma = (2.0 * PI * fwhm * dt).sqrt();
    let n = n as usize;
    if sigma == 0.0 {
        return Ok(JitterSeries {
            dt,
            values: vec![0.0; n],
        });
    }
    let step = Normal::new(0.0, sigma).map_err(|e| invalid(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let values = (0..n)
        .map(|_| step.sample(&mut rng) / (2.0 * PI * dt))
        .collect();
    Ok(JitterSeries { dt, values })
}

/// Normalized noise `V(δ)` tabulated on a detuning grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DetuningResponse {
    pub detunings: Vec<f64>,
    pub noise_linear: Vec<f64>,
}

impl DetuningResponse {
    pub fn new(detunings: Vec<f64>, noise_linear: Vec<f64>) -> Result<Self> {
        if detunings.len() < 2 || detunings.len() != noise_linear.len() {
            return Err(invalid("detuning response needs >= 2 matching points"));
        }
        if !detunings.windows(2).all(|w| w[1] > w[0]) {
            return Err(invalid("detuning grid must be strictly increasing"));
        }
        if noise_linear.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(invalid("noise values must be finite and positive"));
        }
        Ok(Self {
            detunings,
            noise_linear,
        })
    }

    pub fn at(&self, delta: f64) -> Result<f64> {
        let d = &self.detunings;
        if delta < d[0] || delta > d[d.len() - 1] {
            return Err(invalid(format!("detuning {delta} Hz is off the response grid")));
        }
        let i = d.partition_point(|&x| x <= delta).clamp(1, d.len() - 1);
        let t = (delta - d[i - 1]) / (d[i] - d[i - 1]);
        Ok(self.noise_linear[i - 1] + t * (self.noise_linear[i] - self.noise_linear[i - 1]))
    }
}

/// Largest Lorentzian probability mass allowed outside the response grid.
pub const MAX_TAIL_MASS: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JitterAverage {
    pub linear: f64,
    pub db: f64,
    /// `10 log10(<V> / V(δ0))`
    pub degradation_db: f64,
}

/// Average of `V(δ0 + δ)` over the stationary Lorentzian distribution of δ
/// with FWHM equal to the beat linewidth.
///
/// `V` is taken as piecewise linear between grid points and integrated
/// exactly against the Lorentzian; the distribution is renormalized to the
/// grid.
pub fn effective_squeezing_under_jitter(
    source: &ProbeSource,
    response: &DetuningResponse,
    delta0: f64,
) -> Result<JitterAverage> {
    source.validate()?;
    let center = response.at(delta0)?;
    let gamma = 0.5 * source.beat_fwhm();
    if gamma == 0.0 {
        return Ok(JitterAverage {
            linear: center,
            db: to_db(center),
            degradation_db: 0.0,
        });
    }
    let d = &response.detunings;
    let v = &response.noise_linear;
    let cdf = |x: f64| ((x - delta0) / gamma).atan() / PI;
    let mass = cdf(d[d.len() - 1]) - cdf(d[0]);
    if 1.0 - mass > MAX_TAIL_MASS {
        return Err(invalid(format!(
            "jitter range exceeds the response grid: {:.1}% of the detuning distribution falls outside",
            100.0 * (1.0 - mass)
        )));
    }
    let log_term = |x: f64| (gamma * gamma + (x - delta0).powi(2)).ln();
    let mut total = 0.0;
    for i in 1..d.len() {
        let (a, b) = (d[i - 1], d[i]);
        let slope = (v[i] - v[i - 1]) / (b - a);
        let i0 = cdf(b) - cdf(a);
        // ∫ (x - a) L(x) dx over [a, b]
        let i1 = (delta0 - a) * i0 + gamma / (2.0 * PI) * (log_term(b) - log_term(a));
        total += v[i - 1] * i0 + slope * i1;
    }
    let linear = total / mass;
    Ok(JitterAverage {
        linear,
        db: to_db(linear),
        degradation_db: to_db(linear / center),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EomBudget {
    /// Fraction of the EOM input power that reaches the cell as probe.
    pub probe_fraction: f64,
    /// Carrier blocked by the etalons.
    pub rejected_carrier: f64,
    /// +1 order blocked by the etalons.
    pub rejected_plus1: f64,
    /// -1 order power lost in the etalon chain.
    pub chain_loss: f64,
    /// Power outside the three tracked orders.
    pub other_orders: f64,
}

impl EomBudget {
    pub fn total(&self) -> f64 {
        self.probe_fraction + self.rejected_carrier + self.rejected_plus1 + self.chain_loss + self.other_orders
    }
}

pub fn eom_chain_budget(source: &ProbeSource) -> Result<EomBudget> {
    source.validate()?;
    match *source {
        ProbeSource::EomSideband {
            sideband_fracs: (minus1, plus1, carrier),
            etalon_chain_transmissivity,
            ..
        } => Ok(EomBudget {
            probe_fraction: minus1 * etalon_chain_transmissivity,
            rejected_carrier: carrier,
            rejected_plus1: plus1,
            chain_loss: minus1 * (1.0 - etalon_chain_transmissivity),
            other_orders: (1.0 - minus1 - plus1 - carrier).max(0.0),
        }),
        other => Err(Error::WrongSource {
            expected: "eom",
            got: other.preset_name(),
        }),
    }
}

/// PLL excess intensity noise at `analysis_freq`, dB; 0 outside the band and
/// for the other sources.
pub fn pll_excess_noise_db(source: &ProbeSource, analysis_freq: f64) -> f64 {
    match *source {
        ProbeSource::PhaseLockedLoop {
            excess_noise_band: (lo, hi),
            excess_noise_db,
            ..
        } if (lo..=hi).contains(&analysis_freq) => excess_noise_db,
        _ => 0.0,
    }
}
