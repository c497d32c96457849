//! Physical constants and apparatus defaults.

/// Elementary charge, C.
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
/// Planck constant, J s.
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Speed of light, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Boltzmann constant, J/K.
pub const BOLTZMANN: f64 = 1.380_649e-23;
/// Pascal per torr.
pub const PASCAL_PER_TORR: f64 = 133.322_368_421;
pub const ZERO_CELSIUS: f64 = 273.15;

/// 133Cs ground-state hyperfine splitting, Hz (SI second definition).
pub const CS_GROUND_SPLITTING: f64 = 9.192_631_770e9;
/// Cs D1 vacuum wavelength, m.
pub const CS_D1_WAVELENGTH: f64 = 894.592_959_86e-9;

// Operating point of the vapor cell.
/// Pump power, W.
pub const DEFAULT_PUMP_POWER: f64 = 0.6;
/// One-photon detuning, blue of F=3 -> F'=4, Hz.
pub const DEFAULT_DELTA_ONE: f64 = 1.6e9;
pub const DEFAULT_DELTA_TWO: f64 = 0.0;
/// Cell temperature, °C.
pub const DEFAULT_TEMPERATURE: f64 = 112.0;
/// Cell length, m.
pub const CELL_LENGTH: f64 = 0.025;
/// Pump/probe crossing angle, rad.
pub const CROSSING_ANGLE: f64 = 0.006;
/// 1/e² waist radii, m.
pub const PUMP_WAIST: f64 = 560e-6;
pub const PROBE_WAIST: f64 = 300e-6;

/// Validity window of the vapor model, °C.
pub const TEMPERATURE_WINDOW: (f64, f64) = (90.0, 125.0);

// Loss budget.
/// AR-coated cell window, per window.
pub const WINDOW_TRANSMISSION: f64 = 0.98;
/// Glan-Thompson polarizer transmission for the probe polarization.
pub const POLARIZER_TRANSMISSION: f64 = 0.97;
/// Glan-Thompson extinction ratio.
pub const POLARIZER_EXTINCTION: f64 = 1e5;

// Balanced detector and spectrum analyzer.
pub const DETECTOR_QE: f64 = 0.98;
/// Transimpedance gain, V/A.
pub const DETECTOR_TRANSIMPEDANCE: f64 = 1e5;
pub const ELECTRONIC_FLOOR_DB_BELOW_SNL: f64 = 10.0;
pub const ANALYZER_RBW: f64 = 30e3;
pub const ANALYZER_VBW: f64 = 300.0;
/// Analyzer input impedance, ohm.
pub const ANALYZER_IMPEDANCE: f64 = 50.0;

// Probe sources.
pub const INDEPENDENT_BEAT_FWHM: f64 = 5e6;
pub const LOCKED_BEAT_FWHM: f64 = 1.0;
/// PLL reference oscillators, Hz.
pub const PLL_REF_A: f64 = 9.18e9;
pub const PLL_REF_B: f64 = 20e6;
/// Band where the PLL current modulation adds intensity noise, Hz.
pub const PLL_EXCESS_BAND: (f64, f64) = (0.72e6, 4e6);
pub const EOM_MOD_FREQ: f64 = 9.2e9;
pub const EOM_RF_POWER_DBM: f64 = 34.0;
/// Optical power in the (-1, +1, carrier) orders after the EOM.
pub const EOM_SIDEBAND_FRACS: (f64, f64, f64) = (0.10, 0.10, 0.80);
pub const ETALON_FINESSE: f64 = 60.0;
pub const ETALON_CHAIN_TRANSMISSIVITY: f64 = 0.80;
