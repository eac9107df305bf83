//! fNIRS probe model, optical-density and haemoglobin conversion, canonical
//! HRF, synthetic recordings and the channel CSV format.

pub mod hrf;
pub mod mbll;
pub mod probe;
pub mod recording;
pub mod stream;
pub mod synth;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Real;

#[derive(Debug, Error)]
pub enum SignalError {
    #[error("non-positive intensity {value} at channel {channel}, wavelength {wavelength}, sample {sample}")]
    NonPositiveIntensity { channel: usize, wavelength: usize, sample: usize, value: f64 },
    #[error("extinction matrix is singular for wavelengths {0} nm and {1} nm")]
    SingularExtinction(f64, f64),
    #[error("wavelength {0} nm outside the tabulated 650-900 nm range")]
    WavelengthOutOfRange(f64),
    #[error("expected {expected} channels, found {found}")]
    ChannelCount { expected: usize, found: usize },
    #[error("layout line {line}: {message}")]
    Layout { line: usize, message: String },
    #[error("line {line}: {message}")]
    Csv { line: usize, message: String },
    #[error("series invalid: {0}")]
    InvalidSeries(String),
    #[error("protocol invalid: {0}")]
    InvalidProtocol(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Which haemoglobin trace an analysis reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Chromophore {
    #[default]
    Hbo,
    Hbr,
}

/// Per-channel HbO/HbR concentration changes in µM, uniformly sampled.
/// Sample `i` is taken at `start_time + i / sample_rate` on the simulator clock.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct HemoTimeSeries<T> {
    pub sample_rate: T,
    pub start_time: T,
    pub hbo: Vec<Vec<T>>,
    pub hbr: Vec<Vec<T>>,
}

impl<T: Real> HemoTimeSeries<T> {
    pub fn zeros(channels: usize, samples: usize, sample_rate: T) -> Self {
        Self {
            sample_rate,
            start_time: T::zero(),
            hbo: vec![vec![T::zero(); samples]; channels],
            hbr: vec![vec![T::zero(); samples]; channels],
        }
    }

    pub fn channels(&self) -> usize {
        self.hbo.len()
    }

    pub fn len(&self) -> usize {
        self.hbo.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn time(&self, sample: usize) -> T {
        self.start_time + T::from_usize_lossy(sample) / self.sample_rate
    }

    pub fn duration(&self) -> T {
        T::from_usize_lossy(self.len()) / self.sample_rate
    }

    pub fn trace(&self, chromophore: Chromophore) -> &[Vec<T>] {
        match chromophore {
            Chromophore::Hbo => &self.hbo,
            Chromophore::Hbr => &self.hbr,
        }
    }

    pub fn validate(&self) -> Result<(), SignalError> {
        if !(self.sample_rate > T::zero()) || !self.sample_rate.is_finite() {
            return Err(SignalError::InvalidSeries(format!("sample rate {} must be positive", self.sample_rate)));
        }
        if self.hbr.len() != self.hbo.len() {
            return Err(SignalError::InvalidSeries("HbO and HbR channel counts differ".into()));
        }
        let n = self.len();
        for (ch, (o, r)) in self.hbo.iter().zip(&self.hbr).enumerate() {
            if o.len() != n || r.len() != n {
                return Err(SignalError::InvalidSeries(format!("channel {} has a different length", ch + 1)));
            }
            if let Some(i) = o.iter().chain(r).position(|v| !v.is_finite()) {
                return Err(SignalError::InvalidSeries(format!("non-finite value in channel {} at index {i}", ch + 1)));
            }
        }
        Ok(())
    }

    /// Samples `[from, to)` as a new series.
    pub fn slice(&self, from: usize, to: usize) -> Self {
        Self {
            sample_rate: self.sample_rate,
            start_time: self.time(from),
            hbo: self.hbo.iter().map(|c| c[from..to].to_vec()).collect(),
            hbr: self.hbr.iter().map(|c| c[from..to].to_vec()).collect(),
        }
    }
}
