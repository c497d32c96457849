//! Composition of the medium, loss budget and probe source into the
//! normalized noise seen by the analyzer.

use serde::{Deserialize, Serialize};

use crate::detection::{SpectralShapePreset, TwinBeamReadout};
use crate::error::{domain, Result};
use crate::medium::{respond, LossBudget, MediumCalibration, MediumParams, MediumResponse};
use crate::source::{effective_squeezing_under_jitter, DetuningResponse, ProbeSource};

/// Half width of the detuning grid used for jitter averaging, Hz.
pub const JITTER_GRID_HALF_WIDTH: f64 = 50e6;
pub const JITTER_GRID_STEP: f64 = 0.25e6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Setup {
    pub medium: MediumParams,
    pub calibration: MediumCalibration,
    pub losses: LossBudget,
    pub source: ProbeSource,
    pub shape: SpectralShapePreset,
    /// Seed probe power entering the cell, W.
    pub seed_power: f64,
    /// Replaces the medium gain everywhere (e.g. 1.0 to switch FWM off).
    pub gain_override: Option<f64>,
}

impl Setup {
    pub fn response_at(&self, delta_two: f64) -> Result<MediumResponse> {
        let params = MediumParams {
            delta_two,
            ..self.medium
        };
        let mut r = respond(&params, &self.calibration)?;
        if let Some(g) = self.gain_override {
            if !(g >= 1.0 && g.is_finite()) {
                return Err(domain(format!("gain override must be >= 1, got {g}")));
            }
            r.gain = g;
        }
        Ok(r)
    }

    /// `V(δ)` on the jitter grid around the operating two-photon detuning.
    pub fn detuning_response(&self) -> Result<DetuningResponse> {
        let n = (2.0 * JITTER_GRID_HALF_WIDTH / JITTER_GRID_STEP).round() as i64;
        let d0 = self.medium.delta_two;
        let (detunings, noise): (Vec<f64>, Vec<f64>) = (0..=n)
            .map(|i| {
                let d = d0 - JITTER_GRID_HALF_WIDTH + i as f64 * JITTER_GRID_STEP;
                Ok((d, self.response_at(d)?.noise_ratio(&self.losses)?))
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .unzip();
        DetuningResponse::new(detunings, noise)
    }

    pub fn readout(&self) -> Result<TwinBeamReadout> {
        let response = self.response_at(self.medium.delta_two)?;
        let model = response.twin_model(self.seed_power, &self.losses)?;
        let base_noise = if self.source.beat_fwhm() == 0.0 || self.gain_override.is_some() {
            response.noise_ratio(&self.losses)?
        } else {
            effective_squeezing_under_jitter(&self.source, &self.detuning_response()?, self.medium.delta_two)?.linear
        };
        let readout = TwinBeamReadout {
            model,
            base_noise,
            source: self.source,
            preset: self.shape,
            tones: Vec::new(),
        };
        readout.validate()?;
        Ok(readout)
    }
}
