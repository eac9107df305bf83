//! Modified Beer-Lambert conversion from raw intensity to HbO/HbR changes.

use serde::{Deserialize, Serialize};

use super::probe::ProbeLayout;
use super::{HemoTimeSeries, SignalError};
use crate::scalar::Real;

pub const DEFAULT_WAVELENGTHS_NM: [f64; 2] = [760.0, 850.0];
pub const DEFAULT_DPF: f64 = 6.0;
pub const DEFAULT_DISTANCE_CM: f64 = 3.0;

/// µM → M.
const MICROMOLAR: f64 = 1e-6;

/// Molar extinction coefficients of HbO2 and Hb in cm⁻¹/M (decadic), 650-900 nm
/// at 10 nm steps.
///
/// S. Prahl, "Optical absorption of hemoglobin", Oregon Medical Laser Center
/// (1999), compiled from W. B. Gratzer and N. Kollias.
const PRAHL_TABLE: [(f64, f64, f64); 26] = [
    (650.0, 368.0, 3750.12),
    (660.0, 319.6, 3226.56),
    (670.0, 294.0, 2795.12),
    (680.0, 277.6, 2407.92),
    (690.0, 276.0, 2051.96),
    (700.0, 290.0, 1794.28),
    (710.0, 314.0, 1540.48),
    (720.0, 348.0, 1325.88),
    (730.0, 390.0, 1102.2),
    (740.0, 446.0, 1115.88),
    (750.0, 518.0, 1405.24),
    (760.0, 586.0, 1548.52),
    (770.0, 650.0, 1311.88),
    (780.0, 710.0, 1075.44),
    (790.0, 756.0, 890.8),
    (800.0, 816.0, 761.72),
    (810.0, 864.0, 717.08),
    (820.0, 916.0, 693.76),
    (830.0, 974.0, 693.04),
    (840.0, 1022.0, 692.36),
    (850.0, 1058.0, 691.32),
    (860.0, 1092.0, 694.32),
    (870.0, 1128.0, 705.84),
    (880.0, 1154.0, 726.44),
    (890.0, 1178.0, 743.6),
    (900.0, 1198.0, 761.84),
];

/// (ε_HbO, ε_HbR) at `wavelength_nm`, linearly interpolated.
pub fn extinction(wavelength_nm: f64) -> Result<(f64, f64), SignalError> {
    let first = PRAHL_TABLE[0].0;
    let last = PRAHL_TABLE[PRAHL_TABLE.len() - 1].0;
    if !(first..=last).contains(&wavelength_nm) {
        return Err(SignalError::WavelengthOutOfRange(wavelength_nm));
    }
    let hi = PRAHL_TABLE.iter().position(|r| r.0 >= wavelength_nm).unwrap_or(PRAHL_TABLE.len() - 1);
    if PRAHL_TABLE[hi].0 == wavelength_nm || hi == 0 {
        return Ok((PRAHL_TABLE[hi].1, PRAHL_TABLE[hi].2));
    }
    let (a, b) = (PRAHL_TABLE[hi - 1], PRAHL_TABLE[hi]);
    let w = (wavelength_nm - a.0) / (b.0 - a.0);
    Ok((a.1 + w * (b.1 - a.1), a.2 + w * (b.2 - a.2)))
}

/// Raw optical intensities, indexed `[channel][wavelength][sample]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct RawIntensitySeries<T> {
    pub sample_rate: T,
    pub start_time: T,
    pub wavelengths: [T; 2],
    pub samples: Vec<[Vec<T>; 2]>,
}

/// Optical density changes, same indexing as [`RawIntensitySeries`].
#[derive(Debug, Clone, PartialEq)]
pub struct OdSeries<T> {
    pub sample_rate: T,
    pub start_time: T,
    pub wavelengths: [T; 2],
    pub od: Vec<[Vec<T>; 2]>,
}

/// `OD(t) = -log10(I(t) / Ī)` with `Ī` the temporal mean of each channel-wavelength.
pub fn intensity_to_od<T: Real>(raw: &RawIntensitySeries<T>) -> Result<OdSeries<T>, SignalError> {
    let mut od = Vec::with_capacity(raw.samples.len());
    for (channel, pair) in raw.samples.iter().enumerate() {
        let mut out: [Vec<T>; 2] = [Vec::new(), Vec::new()];
        for (wavelength, series) in pair.iter().enumerate() {
            if let Some(sample) = series.iter().position(|v| !(*v > T::zero()) || !v.is_finite()) {
                return Err(SignalError::NonPositiveIntensity {
                    channel,
                    wavelength,
                    sample,
                    value: series[sample].as_f64(),
                });
            }
            let mean = series.iter().copied().sum::<T>() / T::from_usize_lossy(series.len().max(1));
            out[wavelength] = series.iter().map(|v| -(*v / mean).log10()).collect();
        }
        od.push(out);
    }
    Ok(OdSeries { sample_rate: raw.sample_rate, start_time: raw.start_time, wavelengths: raw.wavelengths, od })
}

/// 2×2 system mapping (ΔHbO, ΔHbR) in µM to optical density at two wavelengths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtinctionSystem<T> {
    /// Rows are wavelengths, columns (HbO, HbR); already scaled by distance·DPF·1e-6.
    m: [[T; 2]; 2],
}

impl<T: Real> ExtinctionSystem<T> {
    pub fn new(wavelengths: [T; 2], dpf: T, distance_cm: T) -> Result<Self, SignalError> {
        let (w0, w1) = (wavelengths[0].as_f64(), wavelengths[1].as_f64());
        let e0 = extinction(w0)?;
        let e1 = extinction(w1)?;
        let scale = distance_cm * dpf * T::lit(MICROMOLAR);
        let m = [[T::lit(e0.0) * scale, T::lit(e0.1) * scale], [T::lit(e1.0) * scale, T::lit(e1.1) * scale]];
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        let size = (m[0][0] * m[1][1]).abs() + (m[0][1] * m[1][0]).abs();
        if det.abs() <= size * T::lit(1e-9) {
            return Err(SignalError::SingularExtinction(w0, w1));
        }
        Ok(Self { m })
    }

    /// Forward model: OD at both wavelengths.
    pub fn forward(&self, hbo: T, hbr: T) -> [T; 2] {
        [self.m[0][0] * hbo + self.m[0][1] * hbr, self.m[1][0] * hbo + self.m[1][1] * hbr]
    }

    /// Inverse model: (ΔHbO, ΔHbR) from OD at both wavelengths.
    pub fn invert(&self, od: [T; 2]) -> (T, T) {
        let [[a, b], [c, d]] = self.m;
        let det = a * d - b * c;
        ((d * od[0] - b * od[1]) / det, (a * od[1] - c * od[0]) / det)
    }
}

/// Solves the per-sample 2×2 mBLL system on every channel.
pub fn od_to_hemoglobin<T: Real>(
    od: &OdSeries<T>,
    layout: &ProbeLayout<T>,
    dpf: T,
    distance_cm: T,
) -> Result<HemoTimeSeries<T>, SignalError> {
    if od.od.len() != layout.channels.len() {
        return Err(SignalError::ChannelCount { expected: layout.channels.len(), found: od.od.len() });
    }
    let system = ExtinctionSystem::new(od.wavelengths, dpf, distance_cm)?;
    let mut hbo = Vec::with_capacity(od.od.len());
    let mut hbr = Vec::with_capacity(od.od.len());
    for [w0, w1] in &od.od {
        let (o, r): (Vec<T>, Vec<T>) = w0.iter().zip(w1).map(|(a, b)| system.invert([*a, *b])).unzip();
        hbo.push(o);
        hbr.push(r);
    }
    Ok(HemoTimeSeries { sample_rate: od.sample_rate, start_time: od.start_time, hbo, hbr })
}
