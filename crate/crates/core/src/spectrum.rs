//! Spectrum container shared by the detection, analysis and probe-source code,
//! plus its CSV form `freq_hz,power_db,rbw_hz,vbw_hz,normalized`.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::noise::{from_db, to_db};

pub const CSV_HEADER: [&str; 5] = ["freq_hz", "power_db", "rbw_hz", "vbw_hz", "normalized"];

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSpectrum {
    pub freqs: Vec<f64>,
    /// Absolute (dBm in the RBW) or, when `normalized`, dB relative to the SNL.
    pub power_db: Vec<f64>,
    pub rbw: f64,
    pub vbw: f64,
    pub normalized: bool,
    pub snl_reference: Option<Box<NoiseSpectrum>>,
}

impl NoiseSpectrum {
    pub fn new(freqs: Vec<f64>, power_db: Vec<f64>, rbw: f64, vbw: f64) -> Result<Self> {
        let s = Self {
            freqs,
            power_db,
            rbw,
            vbw,
            normalized: false,
            snl_reference: None,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn from_linear(freqs: Vec<f64>, power: &[f64], rbw: f64, vbw: f64) -> Result<Self> {
        Self::new(freqs, power.iter().map(|&p| to_db(p)).collect(), rbw, vbw)
    }

    pub fn validate(&self) -> Result<()> {
        if self.freqs.is_empty() || self.freqs.len() != self.power_db.len() {
            return Err(invalid(format!(
                "spectrum needs matching non-empty grids ({} freqs, {} values)",
                self.freqs.len(),
                self.power_db.len()
            )));
        }
        if !self.freqs.windows(2).all(|w| w[1] > w[0]) {
            return Err(invalid("spectrum frequencies must be strictly increasing"));
        }
        if !(self.rbw > 0.0 && self.vbw > 0.0) {
            return Err(invalid("rbw and vbw must be positive"));
        }
        if self.power_db.iter().any(|v| v.is_nan()) {
            return Err(invalid("spectrum contains NaN"));
        }
        if self.normalized && self.snl_reference.is_none() {
            return Err(invalid("normalized spectrum must carry its SNL reference"));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.freqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs.is_empty()
    }

    pub fn linear(&self) -> Vec<f64> {
        self.power_db.iter().map(|&d| from_db(d)).collect()
    }

    pub fn grid_step(&self) -> f64 {
        if self.freqs.len() < 2 {
            return self.rbw;
        }
        (self.freqs[self.freqs.len() - 1] - self.freqs[0]) / (self.freqs.len() - 1) as f64
    }

    /// Ratio to `snl` in dB; both traces must share a grid.
    pub fn normalize(&self, snl: &NoiseSpectrum) -> Result<NoiseSpectrum> {
        check_same_grid(self, snl)?;
        Ok(NoiseSpectrum {
            freqs: self.freqs.clone(),
            power_db: self
                .power_db
                .iter()
                .zip(&snl.power_db)
                .map(|(a, b)| a - b)
                .collect(),
            rbw: self.rbw,
            vbw: self.vbw,
            normalized: true,
            snl_reference: Some(Box::new(snl.clone())),
        })
    }

    /// Index range of grid points inside `[lo, hi]`.
    pub fn band_indices(&self, lo: f64, hi: f64) -> Result<std::ops::Range<usize>> {
        if !(lo <= hi) {
            return Err(invalid(format!("empty band [{lo}, {hi}]")));
        }
        let start = self.freqs.partition_point(|&f| f < lo);
        let end = self.freqs.partition_point(|&f| f <= hi);
        if start >= end {
            return Err(invalid(format!(
                "band [{lo}, {hi}] Hz does not overlap the grid [{}, {}] Hz",
                self.freqs[0],
                self.freqs[self.freqs.len() - 1]
            )));
        }
        Ok(start..end)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(CSV_HEADER)?;
        let flag = if self.normalized { "1" } else { "0" };
        for (f, p) in self.freqs.iter().zip(&self.power_db) {
            w.write_record([
                f.to_string(),
                p.to_string(),
                self.rbw.to_string(),
                self.vbw.to_string(),
                flag.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a spectrum written by [`write_csv`](Self::write_csv). A
    /// normalized trace comes back without its SNL companion; attach it with
    /// [`with_reference`](Self::with_reference).
    pub fn read_csv<R: Read>(reader: R) -> Result<RawSpectrum> {
        let mut r = csv::Reader::from_reader(reader);
        let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
        if header != CSV_HEADER {
            return Err(invalid(format!(
                "unexpected spectrum header {header:?}, want {CSV_HEADER:?}"
            )));
        }
        let mut raw = RawSpectrum::default();
        for row in r.deserialize() {
            let row: Row = row?;
            if raw.freqs.is_empty() {
                raw.rbw = row.rbw_hz;
                raw.vbw = row.vbw_hz;
                raw.normalized = row.normalized != 0;
            } else if row.rbw_hz != raw.rbw || row.vbw_hz != raw.vbw || (row.normalized != 0) != raw.normalized {
                return Err(invalid(format!(
                    "inconsistent metadata at {} Hz",
                    row.freq_hz
                )));
            }
            raw.freqs.push(row.freq_hz);
            raw.power_db.push(row.power_db);
        }
        Ok(raw)
    }

    pub fn with_reference(mut self, snl: NoiseSpectrum) -> Result<Self> {
        check_same_grid(&self, &snl)?;
        self.snl_reference = Some(Box::new(snl));
        Ok(self)
    }
}

#[derive(Debug, Deserialize, Serialize)]
struct Row {
    freq_hz: f64,
    power_db: f64,
    rbw_hz: f64,
    vbw_hz: f64,
    normalized: u8,
}

/// Spectrum as read back from CSV, before the SNL reference is attached.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawSpectrum {
    pub freqs: Vec<f64>,
    pub power_db: Vec<f64>,
    pub rbw: f64,
    pub vbw: f64,
    pub normalized: bool,
}

impl RawSpectrum {
    /// Absolute trace.
    pub fn into_absolute(self) -> Result<NoiseSpectrum> {
        if self.normalized {
            return Err(invalid("trace is normalized; use into_normalized"));
        }
        NoiseSpectrum::new(self.freqs, self.power_db, self.rbw, self.vbw)
    }

    pub fn into_normalized(self, snl: NoiseSpectrum) -> Result<NoiseSpectrum> {
        if !self.normalized {
            return Err(invalid("trace is not normalized"));
        }
        let s = NoiseSpectrum {
            freqs: self.freqs,
            power_db: self.power_db,
            rbw: self.rbw,
            vbw: self.vbw,
            normalized: true,
            snl_reference: None,
        };
        let s = s.with_reference(snl)?;
        s.validate()?;
        Ok(s)
    }
}

pub(crate) fn check_same_grid(a: &NoiseSpectrum, b: &NoiseSpectrum) -> Result<()> {
    if a.freqs != b.freqs {
        return Err(Error::InvalidInput("spectra are on different frequency grids".into()));
    }
    Ok(())
}
