//! Quantum-noise algebra of a seeded phase-insensitive twin-beam amplifier.
//!
//! Everything here works in the linearized (bright-seed) picture: photon-number
//! fluctuations are Gaussian and proportional to amplitude-quadrature
//! fluctuations. Variances are reported relative to the shot-noise limit of a
//! coherent beam carrying the same detected photon flux.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{domain, invalid, Result};

/// Minimum sample count accepted by [`mc_noise_ratio`].
pub const MC_MIN_SAMPLES: usize = 10_000;

/// Twin-beam source as seen by the detector.
///
/// `eta_probe` and `eta_conj` lump every loss between the gain medium and the
/// photocurrent (cell absorption, windows, polarizer, detector efficiency).
/// Absorption never reduces `gain`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwinBeamModel {
    pub gain: f64,
    /// Seed probe power entering the medium, W.
    pub seed_power: f64,
    pub eta_probe: f64,
    pub eta_conj: f64,
}

impl TwinBeamModel {
    pub fn new(gain: f64, seed_power: f64, eta_probe: f64, eta_conj: f64) -> Result<Self> {
        let model = Self {
            gain,
            seed_power,
            eta_probe,
            eta_conj,
        };
        model.validate()?;
        Ok(model)
    }

    /// Lossless model with unit seed.
    pub fn ideal(gain: f64) -> Result<Self> {
        Self::new(gain, 1.0, 1.0, 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gain.is_finite() && self.gain >= 1.0) {
            return Err(domain(format!("gain must be >= 1, got {}", self.gain)));
        }
        if !(self.seed_power.is_finite() && self.seed_power > 0.0) {
            return Err(domain(format!(
                "seed power must be > 0, got {}",
                self.seed_power
            )));
        }
        for (name, eta) in [("eta_probe", self.eta_probe), ("eta_conj", self.eta_conj)] {
            if !(0.0..=1.0).contains(&eta) {
                return Err(domain(format!("{name} must lie in [0, 1], got {eta}")));
            }
        }
        Ok(())
    }

    /// Probe and conjugate powers after the detector losses, in units of the seed.
    pub fn detected_fractions(&self) -> (f64, f64) {
        (self.eta_probe * self.gain, self.eta_conj * (self.gain - 1.0))
    }
}

/// Intensity-difference variance relative to the shot-noise limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseRatio {
    pub linear: f64,
    pub db: f64,
}

impl NoiseRatio {
    pub fn from_linear(linear: f64) -> Result<Self> {
        if !(linear.is_finite() && linear > 0.0) {
            return Err(domain(format!("noise ratio must be > 0, got {linear}")));
        }
        Ok(Self {
            linear,
            db: to_db(linear),
        })
    }

    pub fn from_db(db: f64) -> Result<Self> {
        Self::from_linear(from_db(db))
    }
}

pub fn to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

pub fn from_db(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Probe and conjugate output powers of a lossless amplifier.
///
/// The probe-minus-conjugate difference always equals the seed.
pub fn ideal_output_powers(seed_power: f64, gain: f64) -> Result<(f64, f64)> {
    TwinBeamModel::new(gain, seed_power, 1.0, 1.0)?;
    Ok((gain * seed_power, (gain - 1.0) * seed_power))
}

/// Noise ratio `1/(2G-1)` of the lossless amplifier.
pub fn ideal_noise_ratio(gain: f64) -> Result<NoiseRatio> {
    if !(gain.is_finite() && gain >= 1.0) {
        return Err(domain(format!("gain must be >= 1, got {gain}")));
    }
    NoiseRatio::from_linear(1.0 / (2.0 * gain - 1.0))
}

/// Noise ratio after independent beamsplitter losses on each arm.
pub fn lossy_noise_ratio(model: &TwinBeamModel) -> Result<NoiseRatio> {
    model.validate()?;
    let g = model.gain;
    let (ep, ec) = (model.eta_probe, model.eta_conj);
    let snl = ep * g + ec * (g - 1.0);
    if snl <= 0.0 {
        return Err(domain("no detected light: eta_probe * G + eta_conj * (G - 1) = 0"));
    }
    let amplified = ep * ep * g * (2.0 * g - 1.0) + ec * ec * (g - 1.0) * (2.0 * g - 1.0)
        - 4.0 * ep * ec * g * (g - 1.0);
    let partition = ep * (1.0 - ep) * g + ec * (1.0 - ec) * (g - 1.0);
    NoiseRatio::from_linear((amplified + partition) / snl)
}

/// Monte Carlo estimate of the lossy noise ratio with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub estimate: f64,
    pub standard_error: f64,
}

/// Samples the linearized photocount difference of the two-mode squeezed
/// output and returns its variance relative to the shot-noise limit.
///
/// Amplitude quadratures are built from the seed and vacuum inputs so that
/// `Var(X_p) = Var(X_c) = 2G-1` and `Cov(X_p, X_c) = 2 sqrt(G(G-1))`; each arm
/// then picks up binomial partition noise from its loss.
pub fn mc_noise_ratio(model: &TwinBeamModel, n_samples: usize, rng_seed: u64) -> Result<McEstimate> {
    model.validate()?;
    if n_samples < MC_MIN_SAMPLES {
        return Err(invalid(format!(
            "need at least {MC_MIN_SAMPLES} samples, got {n_samples}"
        )));
    }
    let g = model.gain;
    let (ep, ec) = (model.eta_probe, model.eta_conj);
    let snl = ep * g + ec * (g - 1.0);
    if snl <= 0.0 {
        return Err(domain("no detected light: eta_probe * G + eta_conj * (G - 1) = 0"));
    }
    let (sg, sg1) = (g.sqrt(), (g - 1.0).sqrt());
    // photon-number scale factors, unit seed flux
    let probe_scale = ep * sg;
    let conj_scale = ec * sg1;
    let probe_partition = (ep * (1.0 - ep) * g).sqrt();
    let conj_partition = (ec * (1.0 - ec) * (g - 1.0)).sqrt();

    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let samples: Vec<f64> = (0..n_samples)
        .map(|_| {
            let seed_q: f64 = StandardNormal.sample(&mut rng);
            let vac_q: f64 = StandardNormal.sample(&mut rng);
            let xi_p: f64 = StandardNormal.sample(&mut rng);
            let xi_c: f64 = StandardNormal.sample(&mut rng);
            let x_p = sg * seed_q + sg1 * vac_q;
            let x_c = sg1 * seed_q + sg * vac_q;
            (probe_scale * x_p + probe_partition * xi_p) - (conj_scale * x_c + conj_partition * xi_c)
        })
        .collect();

    let n = n_samples as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let (m2, m4) = samples.iter().fold((0.0, 0.0), |(m2, m4), &s| {
        let d2 = (s - mean) * (s - mean);
        (m2 + d2, m4 + d2 * d2)
    });
    let var = m2 / (n - 1.0);
    let fourth = m4 / n;
    let var_se = ((fourth - var * var).max(0.0) / n).sqrt();
    Ok(McEstimate {
        estimate: var / snl,
        standard_error: var_se / snl,
    })
}
