//! Squeezing figures from spectra and noise-versus-power scans.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::noise::to_db;
use crate::spectrum::NoiseSpectrum;

pub const SCAN_CSV_HEADER: [&str; 3] = ["power_w", "noise_linear", "sigma"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerScanPoint {
    #[serde(rename = "power_w")]
    pub total_power: f64,
    #[serde(rename = "noise_linear")]
    pub noise_power: f64,
    #[serde(rename = "sigma")]
    pub std_dev: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
}

/// Straight-line fit of noise against optical power.
///
/// Weighted by `1/σ²` when every point carries `σ > 0` (slope error from the
/// stated σ), otherwise ordinary least squares with the slope error taken
/// from the residuals.
pub fn fit_noise_vs_power(points: &[PowerScanPoint]) -> Result<LineFit> {
    if points.len() < 3 {
        return Err(invalid(format!("need at least 3 scan points, got {}", points.len())));
    }
    for p in points {
        if !(p.total_power > 0.0 && p.noise_power.is_finite() && p.std_dev >= 0.0) {
            return Err(invalid(format!("invalid scan point {p:?}")));
        }
    }
    let weighted = points.iter().all(|p| p.std_dev > 0.0);
    let w = |p: &PowerScanPoint| if weighted { 1.0 / (p.std_dev * p.std_dev) } else { 1.0 };

    let sw: f64 = points.iter().map(w).sum();
    let mx = points.iter().map(|p| w(p) * p.total_power).sum::<f64>() / sw;
    let my = points.iter().map(|p| w(p) * p.noise_power).sum::<f64>() / sw;
    let sxx: f64 = points.iter().map(|p| w(p) * (p.total_power - mx).powi(2)).sum();
    let sxy: f64 = points
        .iter()
        .map(|p| w(p) * (p.total_power - mx) * (p.noise_power - my))
        .sum();
    if !(sxx > 1e-12 * sw * mx * mx) {
        return Err(invalid("scan powers are degenerate: need at least two distinct powers"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let slope_stderr = if weighted {
        (1.0 / sxx).sqrt()
    } else {
        let rss: f64 = points
            .iter()
            .map(|p| (p.noise_power - intercept - slope * p.total_power).powi(2))
            .sum();
        (rss / (points.len() - 2) as f64 / sxx).sqrt()
    };
    Ok(LineFit {
        slope,
        intercept,
        slope_stderr,
    })
}

/// Slope ratio with its propagated standard error.
pub fn slope_ratio(twin: &LineFit, snl: &LineFit) -> Result<(f64, f64)> {
    if !(twin.slope > 0.0 && snl.slope > 0.0) {
        return Err(invalid(format!(
            "slopes must be positive (twin {}, snl {})",
            twin.slope, snl.slope
        )));
    }
    let r = twin.slope / snl.slope;
    let rel = ((twin.slope_stderr / twin.slope).powi(2) + (snl.slope_stderr / snl.slope).powi(2)).sqrt();
    Ok((r, r * rel))
}

pub fn slope_ratio_to_db(twin: &LineFit, snl: &LineFit) -> Result<f64> {
    Ok(to_db(slope_ratio(twin, snl)?.0))
}

/// Frequency and level of the deepest point of a normalized spectrum in `band`.
pub fn max_squeezing(spectrum: &NoiseSpectrum, band: (f64, f64)) -> Result<(f64, f64)> {
    if !spectrum.normalized {
        return Err(invalid("max_squeezing needs an SNL-normalized spectrum"));
    }
    let range = spectrum.band_indices(band.0, band.1)?;
    let i = range
        .min_by(|&a, &b| spectrum.power_db[a].total_cmp(&spectrum.power_db[b]))
        .expect("non-empty band");
    Ok((spectrum.freqs[i], spectrum.power_db[i]))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqueezingBandwidth {
    pub width: f64,
    pub lower: f64,
    pub upper: f64,
    /// The trace stays below threshold up to the top of the measured span.
    pub exceeds_span: bool,
    /// No point is below threshold; `width` is 0.
    pub no_squeezing: bool,
}

/// Width of the contiguous sub-threshold interval around the spectrum
/// minimum, with crossings interpolated linearly in dB.
pub fn squeezing_bandwidth(spectrum: &NoiseSpectrum, threshold_db: f64) -> Result<SqueezingBandwidth> {
    if !spectrum.normalized {
        return Err(invalid("squeezing_bandwidth needs an SNL-normalized spectrum"));
    }
    let f = &spectrum.freqs;
    let y = &spectrum.power_db;
    let imin = (0..y.len()).min_by(|&a, &b| y[a].total_cmp(&y[b])).unwrap_or(0);
    if y[imin] >= threshold_db {
        return Ok(SqueezingBandwidth {
            width: 0.0,
            lower: f[imin],
            upper: f[imin],
            exceeds_span: false,
            no_squeezing: true,
        });
    }
    let crossing = |i: usize, j: usize| {
        let t = (threshold_db - y[i]) / (y[j] - y[i]);
        f[i] + t * (f[j] - f[i])
    };
    let mut lo = imin;
    while lo > 0 && y[lo - 1] < threshold_db {
        lo -= 1;
    }
    let mut hi = imin;
    while hi + 1 < y.len() && y[hi + 1] < threshold_db {
        hi += 1;
    }
    let lower = if lo == 0 { f[0] } else { crossing(lo, lo - 1) };
    let exceeds_span = hi + 1 == y.len();
    let upper = if exceeds_span { f[hi] } else { crossing(hi, hi + 1) };
    Ok(SqueezingBandwidth {
        width: upper - lower,
        lower,
        upper,
        exceeds_span,
        no_squeezing: false,
    })
}

/// Full width at half maximum of the strongest line in a spectrum, in linear
/// power with interpolated crossings.
pub fn line_fwhm(spectrum: &NoiseSpectrum) -> Result<f64> {
    let p = spectrum.linear();
    let f = &spectrum.freqs;
    let imax = (0..p.len()).max_by(|&a, &b| p[a].total_cmp(&p[b])).unwrap_or(0);
    let half = 0.5 * p[imax];
    let mut lo = imax;
    while lo > 0 && p[lo] > half {
        lo -= 1;
    }
    let mut hi = imax;
    while hi + 1 < p.len() && p[hi] > half {
        hi += 1;
    }
    if p[lo] > half || p[hi] > half {
        return Err(invalid("line does not fall to half maximum inside the span"));
    }
    let interp = |a: usize, b: usize| f[a] + (half - p[a]) / (p[b] - p[a]) * (f[b] - f[a]);
    Ok(interp(hi - 1, hi) - interp(lo + 1, lo))
}

pub fn write_scan_csv<W: Write>(points: &[PowerScanPoint], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(SCAN_CSV_HEADER)?;
    for p in points {
        w.write_record([
            p.total_power.to_string(),
            p.noise_power.to_string(),
            p.std_dev.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_scan_csv<R: Read>(reader: R) -> Result<Vec<PowerScanPoint>> {
    let mut r = csv::Reader::from_reader(reader);
    let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    if header != SCAN_CSV_HEADER {
        return Err(invalid(format!(
            "unexpected power-scan header {header:?}, want {SCAN_CSV_HEADER:?}"
        )));
    }
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}
