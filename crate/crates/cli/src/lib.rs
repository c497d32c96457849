//! Configuration-driven runs of the twin-beam simulation: spectra, power
//! scans, parameter sweeps, beat notes and calibration fitting.

pub mod calibrate;
pub mod config;
pub mod run;

pub use calibrate::{calibrate, CalibrationReport, InfeasibleTargets};
pub use config::{load_calibration, load_config, load_targets, ConfigError, ExperimentConfig, Targets};
pub use run::{run_beat, run_power_scan, run_spectrum, run_sweep};
