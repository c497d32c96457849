//! Simulation of intensity-difference squeezed twin beams from a double-Λ
//! four-wave-mixing amplifier in hot cesium vapor.
//!
//! * [`noise`]: closed-form and Monte Carlo noise ratios of the lossy amplifier
//! * [`medium`]: phenomenological gain, absorption and excess noise of the cell
//! * [`source`]: probe-generation methods, beat notes and detuning jitter
//! * [`detection`]: balanced detection and spectrum-analyzer emulation
//! * [`analysis`]: slope-ratio squeezing, maximum squeezing and bandwidth
//! * [`readout`]: the composed medium -> detector prediction

pub mod analysis;
pub mod constants;
pub mod detection;
mod error;
pub mod medium;
pub mod noise;
pub mod readout;
pub mod seed;
pub mod source;
pub mod spectrum;

pub use error::{Error, Result};
