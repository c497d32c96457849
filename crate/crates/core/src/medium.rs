//! Phenomenological gain/absorption model of the hot Cs double-Λ cell.
//!
//! The gain law is
//!
//! ```text
//! G = 1 + g0 · (P/P_ref) · (n(T)/n(T_ref)) · (L/L_ref) · R(δ) · D(Δ)
//! R(δ) = exp(-a δ) / (1 + (δ/γ₂)²)              two-photon response
//! D(Δ) = (Δ_ref² + Δ_w²) / (Δ² + Δ_w²)            one-photon response
//! ```
//!
//! `R` is strictly decreasing whenever `a γ₂ > 1`. Probe absorption follows
//! the far wing of the Doppler line, `OD = k · n/n_ref · L/L_ref · (Δ_ref/Δ)²`;
//! the conjugate sits one ground splitting further out. Excess noise from
//! higher-order nonlinear processes is a hinge in `-δ` and in `T - T_th`,
//! scaled by pump power.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::*;
use crate::error::{domain, invalid, Error, Result};
use crate::noise::{lossy_noise_ratio, to_db, TwinBeamModel};

/// Saturated vapor pressure of liquid cesium, torr (Taylor-Langmuir form).
pub fn vapor_pressure_torr(temperature: f64) -> Result<f64> {
    check_temperature(temperature)?;
    let t = temperature + ZERO_CELSIUS;
    Ok(10f64.powf(8.221_27 - 4006.048 / t - 0.000_601_94 * t - 0.196_23 * t.log10()))
}

/// Cs number density in the cell, atoms/m³, from the vapor pressure and the
/// ideal-gas law.
pub fn vapor_density(temperature: f64) -> Result<f64> {
    let p = vapor_pressure_torr(temperature)? * PASCAL_PER_TORR;
    Ok(p / (BOLTZMANN * (temperature + ZERO_CELSIUS)))
}

fn check_temperature(temperature: f64) -> Result<()> {
    let (lo, hi) = TEMPERATURE_WINDOW;
    if !(lo..=hi).contains(&temperature) {
        return Err(domain(format!(
            "temperature {temperature} °C outside model window [{lo}, {hi}] °C"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MediumParams {
    /// W
    pub pump_power: f64,
    /// One-photon detuning Δ of the pump, blue of F=3 -> F'=4, Hz.
    pub delta_one: f64,
    /// Two-photon detuning δ, Hz.
    pub delta_two: f64,
    /// °C
    pub temperature: f64,
    /// m
    pub cell_length: f64,
    /// Exit-window transmission.
    pub window_transmission: f64,
    pub crossing_angle: f64,
    pub pump_waist: f64,
    pub probe_waist: f64,
}

impl Default for MediumParams {
    fn default() -> Self {
        Self {
            pump_power: DEFAULT_PUMP_POWER,
            delta_one: DEFAULT_DELTA_ONE,
            delta_two: DEFAULT_DELTA_TWO,
            temperature: DEFAULT_TEMPERATURE,
            cell_length: CELL_LENGTH,
            window_transmission: WINDOW_TRANSMISSION,
            crossing_angle: CROSSING_ANGLE,
            pump_waist: PUMP_WAIST,
            probe_waist: PROBE_WAIST,
        }
    }
}

impl MediumParams {
    pub fn validate(&self) -> Result<()> {
        // pump_power = 0 is allowed: it is the no-FWM limit with G = 1
        if !(self.pump_power.is_finite() && self.pump_power >= 0.0) {
            return Err(domain(format!("pump power must be >= 0 W, got {}", self.pump_power)));
        }
        if !(self.delta_one.is_finite() && self.delta_one > 0.0) {
            return Err(domain(format!(
                "one-photon detuning must be > 0 Hz (blue side), got {}",
                self.delta_one
            )));
        }
        if !self.delta_two.is_finite() {
            return Err(domain("two-photon detuning must be finite"));
        }
        check_temperature(self.temperature)?;
        if !(self.cell_length.is_finite() && self.cell_length > 0.0) {
            return Err(domain(format!("cell length must be > 0, got {}", self.cell_length)));
        }
        if !(self.window_transmission > 0.0 && self.window_transmission <= 1.0) {
            return Err(domain(format!(
                "window transmission must lie in (0, 1], got {}",
                self.window_transmission
            )));
        }
        for (name, v) in [
            ("crossing_angle", self.crossing_angle),
            ("pump_waist", self.pump_waist),
            ("probe_waist", self.probe_waist),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(domain(format!("{name} must be > 0, got {v}")));
            }
        }
        Ok(())
    }
}

/// Coefficients of the phenomenological medium model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MediumCalibration {
    /// `G - 1` at the reference operating point.
    pub g0: f64,
    /// Two-photon resonance half width, Hz.
    pub gamma_2: f64,
    /// Exponential skew of the two-photon response, 1/Hz.
    pub delta_asym: f64,
    /// Width scale of the one-photon response, Hz.
    pub detuning_width: f64,
    /// Probe optical depth at the reference point.
    pub abs_strength: f64,
    /// Excess noise per Hz of negative two-photon detuning.
    pub xs_delta: f64,
    /// Excess noise per °C above `xs_temp_threshold`.
    pub xs_temp: f64,
    pub xs_temp_threshold: f64,
    pub ref_pump_power: f64,
    pub ref_temperature: f64,
    pub ref_delta_one: f64,
    pub ref_cell_length: f64,
}

impl MediumCalibration {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("gamma_2", self.gamma_2),
            ("delta_asym", self.delta_asym),
            ("detuning_width", self.detuning_width),
            ("ref_pump_power", self.ref_pump_power),
            ("ref_delta_one", self.ref_delta_one),
            ("ref_cell_length", self.ref_cell_length),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(format!("calibration {name} must be > 0, got {v}")));
            }
        }
        let non_negative = [
            ("g0", self.g0),
            ("abs_strength", self.abs_strength),
            ("xs_delta", self.xs_delta),
            ("xs_temp", self.xs_temp),
        ];
        for (name, v) in non_negative {
            if !(v.is_finite() && v >= 0.0) {
                return Err(invalid(format!("calibration {name} must be >= 0, got {v}")));
            }
        }
        check_temperature(self.ref_temperature)?;
        if !self.xs_temp_threshold.is_finite() {
            return Err(invalid("calibration xs_temp_threshold must be finite"));
        }
        if self.delta_asym * self.gamma_2 <= 1.0 {
            return Err(invalid(format!(
                "two-photon response is not monotone: delta_asym * gamma_2 = {} must exceed 1",
                self.delta_asym * self.gamma_2
            )));
        }
        Ok(())
    }

    pub fn two_photon_response(&self, delta_two: f64) -> f64 {
        let x = delta_two / self.gamma_2;
        (-self.delta_asym * delta_two).exp() / (1.0 + x * x)
    }

    pub fn one_photon_response(&self, delta_one: f64) -> f64 {
        let w2 = self.detuning_width * self.detuning_width;
        (self.ref_delta_one * self.ref_delta_one + w2) / (delta_one * delta_one + w2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MediumResponse {
    pub gain: f64,
    pub eta_cell_probe: f64,
    pub eta_cell_conj: f64,
    /// Added to the normalized intensity-difference noise.
    pub excess_noise: f64,
}

/// Losses between the cell exit window and the photocurrent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossBudget {
    pub polarizer_transmission: f64,
    pub quantum_efficiency: f64,
}

impl Default for LossBudget {
    fn default() -> Self {
        Self {
            polarizer_transmission: POLARIZER_TRANSMISSION,
            quantum_efficiency: DETECTOR_QE,
        }
    }
}

impl LossBudget {
    /// Everything identical to 1.
    pub fn lossless() -> Self {
        Self {
            polarizer_transmission: 1.0,
            quantum_efficiency: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("polarizer_transmission", self.polarizer_transmission),
            ("quantum_efficiency", self.quantum_efficiency),
        ] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(domain(format!("{name} must lie in (0, 1], got {v}")));
            }
        }
        Ok(())
    }

    pub fn transmission(&self) -> f64 {
        self.polarizer_transmission * self.quantum_efficiency
    }
}

impl MediumResponse {
    pub fn twin_model(&self, seed_power: f64, budget: &LossBudget) -> Result<TwinBeamModel> {
        budget.validate()?;
        let t = budget.transmission();
        TwinBeamModel::new(
            self.gain,
            seed_power,
            self.eta_cell_probe * t,
            self.eta_cell_conj * t,
        )
    }

    /// Normalized intensity-difference noise (linear) at the detector.
    pub fn noise_ratio(&self, budget: &LossBudget) -> Result<f64> {
        let model = self.twin_model(1.0, budget)?;
        Ok(lossy_noise_ratio(&model)?.linear + self.excess_noise)
    }
}

pub fn respond(params: &MediumParams, cal: &MediumCalibration) -> Result<MediumResponse> {
    params.validate()?;
    cal.validate()?;
    let density_ratio = vapor_density(params.temperature)? / vapor_density(cal.ref_temperature)?;
    let pump_ratio = params.pump_power / cal.ref_pump_power;
    let length_ratio = params.cell_length / cal.ref_cell_length;

    let gain = 1.0
        + cal.g0
            * pump_ratio
            * density_ratio
            * length_ratio
            * cal.two_photon_response(params.delta_two)
            * cal.one_photon_response(params.delta_one);

    let column = cal.abs_strength * density_ratio * length_ratio;
    let od_probe = column * (cal.ref_delta_one / params.delta_one).powi(2);
    let od_conj = column * (cal.ref_delta_one / (params.delta_one + CS_GROUND_SPLITTING)).powi(2);

    let excess_noise = pump_ratio
        * (cal.xs_delta * (-params.delta_two).max(0.0)
            + cal.xs_temp * (params.temperature - cal.xs_temp_threshold).max(0.0));

    let response = MediumResponse {
        gain,
        eta_cell_probe: params.window_transmission * (-od_probe).exp(),
        eta_cell_conj: params.window_transmission * (-od_conj).exp(),
        excess_noise,
    };
    if !(response.gain.is_finite() && response.gain >= 1.0 && response.excess_noise.is_finite()) {
        return Err(domain(format!("non-physical medium response {response:?}")));
    }
    Ok(response)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepAxis {
    Pump,
    Delta1,
    Delta2,
    Temperature,
}

impl SweepAxis {
    pub const ALL: [SweepAxis; 4] = [Self::Pump, Self::Delta1, Self::Delta2, Self::Temperature];

    pub fn name(self) -> &'static str {
        match self {
            Self::Pump => "pump",
            Self::Delta1 => "delta1",
            Self::Delta2 => "delta2",
            Self::Temperature => "temperature",
        }
    }

    pub fn unit(self) -> &'static str {
        match self {
            Self::Pump => "W",
            Self::Delta1 | Self::Delta2 => "Hz",
            Self::Temperature => "degC",
        }
    }

    pub fn apply(self, base: &MediumParams, value: f64) -> MediumParams {
        let mut p = *base;
        match self {
            Self::Pump => p.pump_power = value,
            Self::Delta1 => p.delta_one = value,
            Self::Delta2 => p.delta_two = value,
            Self::Temperature => p.temperature = value,
        }
        p
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| {
                let valid: Vec<_> = Self::ALL.iter().map(|a| a.name()).collect();
                invalid(format!("unknown sweep axis '{s}', valid axes: {}", valid.join(", ")))
            })
    }
}

/// Gain and normalized squeezing along one parameter axis.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    pub gain: Vec<f64>,
    pub noise_linear: Vec<f64>,
    pub squeezing_db: Vec<f64>,
}

impl SweepResult {
    pub fn argmin_noise(&self) -> usize {
        self.noise_linear
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap_or(0)
    }
}

/// Sweeps one axis with the others held at `base`.
///
/// `shape_factor` is the fraction of the quantum noise reduction that survives
/// the detection chain at the analysis frequency: the reported noise is
/// `1 - shape_factor · (1 - V)`. Pass 1.0 for the bare medium + loss result.
pub fn squeezing_vs(
    axis: SweepAxis,
    grid: &[f64],
    base: &MediumParams,
    cal: &MediumCalibration,
    budget: &LossBudget,
    shape_factor: f64,
) -> Result<SweepResult> {
    if grid.is_empty() {
        return Err(invalid("sweep grid is empty"));
    }
    let points: Vec<(f64, f64)> = grid
        .par_iter()
        .map(|&v| {
            let r = respond(&axis.apply(base, v), cal)?;
            let n = 1.0 - shape_factor * (1.0 - r.noise_ratio(budget)?);
            Ok((r.gain, n))
        })
        .collect::<Result<_>>()?;
    let (gain, noise_linear): (Vec<f64>, Vec<f64>) = points.into_iter().unzip();
    let squeezing_db = noise_linear.iter().map(|&n| to_db(n)).collect();
    Ok(SweepResult {
        axis,
        values: grid.to_vec(),
        gain,
        noise_linear,
        squeezing_db,
    })
}

/// Evenly spaced grid `start, start + step, ...` up to `stop` inclusive.
pub fn linear_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && stop >= start && start.is_finite() && stop.is_finite()) {
        return Err(invalid(format!("bad grid {start}:{stop}:{step}")));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..n).map(|i| start + i as f64 * step).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    // Independent liquid-phase correlation for cross-checking:
    // log10(P/atm) = 4.165 - 3830/T.
    fn alcock_pressure_torr(celsius: f64) -> f64 {
        10f64.powf(4.165 - 3830.0 / (celsius + ZERO_CELSIUS)) * 760.0
    }

    pub(crate) fn test_calibration() -> MediumCalibration {
        MediumCalibration {
            g0: 2.5,
            gamma_2: 40e6,
            delta_asym: 4e-8,
            detuning_width: 1e9,
            abs_strength: 0.04,
            xs_delta: 8e-9,
            xs_temp: 0.03,
            xs_temp_threshold: 112.0,
            ref_pump_power: 0.6,
            ref_temperature: 112.0,
            ref_delta_one: 1.6e9,
            ref_cell_length: 0.025,
        }
    }

    #[test]
    fn vapor_pressure_matches_independent_correlation() {
        for t in [90.0, 98.0, 105.0, 112.0, 117.0, 125.0] {
            let a = vapor_pressure_torr(t).unwrap();
            let b = alcock_pressure_torr(t);
            assert!((a / b - 1.0).abs() < 0.10, "{t}: {a} vs {b}");
        }
    }

    #[test]
    fn vapor_density_values() {
        // ideal gas: n = P / kT at 112 °C
        let p = vapor_pressure_torr(112.0).unwrap() * PASCAL_PER_TORR;
        let n = vapor_density(112.0).unwrap();
        assert!((n - p / (BOLTZMANN * 385.15)).abs() < 1e-6 * n);
        assert!((n / 3.0198e19 - 1.0).abs() < 1e-3, "{n}");
        assert!(vapor_density(112.0).unwrap() > vapor_density(98.0).unwrap());
    }

    #[test]
    fn vapor_density_doubling_interval() {
        // regression constant: density doubles between 112 °C and 124.42 °C
        let n0 = vapor_density(112.0).unwrap();
        let (mut lo, mut hi) = (112.0, 125.0);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if vapor_density(mid).unwrap() < 2.0 * n0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!((lo - 112.0 - DOUBLING_FROM_112).abs() < 0.01, "{}", lo - 112.0);
    }

    const DOUBLING_FROM_112: f64 = 12.42;

    #[test]
    fn vapor_density_strictly_increasing() {
        let mut prev = 0.0;
        for t in linear_grid(90.0, 125.0, 0.5).unwrap() {
            let n = vapor_density(t).unwrap();
            assert!(n > prev);
            prev = n;
        }
    }

    #[test]
    fn vapor_density_window() {
        assert!(vapor_density(89.9).is_err());
        assert!(vapor_density(125.1).is_err());
    }

    #[test]
    fn zero_pump_means_no_gain() {
        let cal = test_calibration();
        let p = MediumParams {
            pump_power: 0.0,
            ..Default::default()
        };
        let r = respond(&p, &cal).unwrap();
        assert_eq!(r.gain, 1.0);
        assert_eq!(r.excess_noise, 0.0);
        assert!((r.noise_ratio(&LossBudget::default()).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gain_limits() {
        let cal = test_calibration();
        let far = MediumParams {
            delta_one: 1e12,
            ..Default::default()
        };
        assert!(respond(&far, &cal).unwrap().gain - 1.0 < 1e-4);
        let weak = MediumParams {
            pump_power: 1e-6,
            ..Default::default()
        };
        assert!(respond(&weak, &cal).unwrap().gain - 1.0 < 1e-4);
    }

    #[test]
    fn gain_increases_with_pump() {
        let cal = test_calibration();
        let grid = linear_grid(0.1, 1.0, 0.05).unwrap();
        let s = squeezing_vs(SweepAxis::Pump, &grid, &Default::default(), &cal, &LossBudget::default(), 1.0)
            .unwrap();
        assert!(s.gain.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn transmission_drops_toward_resonance_and_with_temperature() {
        let cal = test_calibration();
        let at = |d1: f64, t: f64| {
            respond(
                &MediumParams {
                    delta_one: d1,
                    temperature: t,
                    ..Default::default()
                },
                &cal,
            )
            .unwrap()
        };
        let near = at(0.8e9, 112.0);
        let far = at(3.0e9, 112.0);
        assert!(near.eta_cell_probe < far.eta_cell_probe);
        assert!(near.eta_cell_conj < far.eta_cell_conj);
        let hot = at(1.6e9, 120.0);
        let cold = at(1.6e9, 100.0);
        assert!(hot.eta_cell_probe < cold.eta_cell_probe);
        for r in [near, far, hot, cold] {
            assert!(r.eta_cell_probe > 0.0 && r.eta_cell_probe <= 1.0);
            assert!(r.eta_cell_conj > 0.0 && r.eta_cell_conj <= 1.0);
        }
    }

    #[test]
    fn ideal_composition() {
        let cal = MediumCalibration {
            xs_delta: 0.0,
            xs_temp: 0.0,
            abs_strength: 0.0,
            ..test_calibration()
        };
        let base = MediumParams {
            window_transmission: 1.0,
            ..Default::default()
        };
        let grid = linear_grid(98.0, 117.0, 1.0).unwrap();
        let s = squeezing_vs(SweepAxis::Temperature, &grid, &base, &cal, &LossBudget::lossless(), 1.0).unwrap();
        for (g, n) in s.gain.iter().zip(&s.noise_linear) {
            let ideal = crate::noise::ideal_noise_ratio(*g).unwrap().linear;
            assert!((n - ideal).abs() < 1e-12 * ideal);
        }
    }

    #[test]
    fn rejects_invalid() {
        let cal = test_calibration();
        let bad = MediumParams {
            temperature: 130.0,
            ..Default::default()
        };
        assert!(respond(&bad, &cal).is_err());
        let bad = MediumParams {
            pump_power: -0.1,
            ..Default::default()
        };
        assert!(respond(&bad, &cal).is_err());
        let bad_cal = MediumCalibration {
            delta_asym: 1e-9,
            ..cal
        };
        assert!(bad_cal.validate().is_err());
        assert!(squeezing_vs(SweepAxis::Pump, &[], &Default::default(), &cal, &LossBudget::default(), 1.0).is_err());
    }

    #[test]
    fn axis_parsing() {
        assert_eq!("delta2".parse::<SweepAxis>().unwrap(), SweepAxis::Delta2);
        let err = "detuning".parse::<SweepAxis>().unwrap_err().to_string();
        assert!(err.contains("pump, delta1, delta2, temperature"), "{err}");
    }

    #[test]
    fn grid_is_inclusive() {
        let g = linear_grid(-44e6, 48e6, 4e6).unwrap();
        assert_eq!(g.len(), 24);
        assert_eq!(*g.last().unwrap(), 48e6);
    }
}
