//! Channel-wise GLM contrast analysis and real-time workload estimation.

pub mod contrast;
pub mod design;
pub mod fit;
pub mod workload;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Real;

/// Condition label treated as the implicit baseline (no regressor).
pub const BASELINE_CONDITION: &str = "rest";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GlmError {
    #[error("event {condition:?} at {onset} s lies outside the recording [{start}, {end}] s")]
    EventOutOfRange { condition: String, onset: f64, start: f64, end: f64 },
    #[error("event {condition:?} at {onset} s needs onset >= 0 and duration > 0")]
    InvalidEvent { condition: String, onset: f64 },
    #[error("design is rank deficient: column {column:?} is a combination of earlier columns")]
    RankDeficient { column: String },
    #[error("design has {rows} rows but series has {samples} samples")]
    LengthMismatch { rows: usize, samples: usize },
    #[error("no residual degrees of freedom ({rows} rows, {cols} columns)")]
    NoDegreesOfFreedom { rows: usize, cols: usize },
    #[error("non-finite value in channel {channel} at sample {sample}")]
    NonFinite { channel: usize, sample: usize },
    #[error("contrast has {got} entries, design has {expected} columns")]
    ContrastLength { got: usize, expected: usize },
    #[error("contrast variance is zero on channel {0}")]
    ZeroContrastVariance(usize),
    #[error("unknown condition {name:?}; available: {available:?}")]
    UnknownCondition { name: String, available: Vec<String> },
    #[error("window has {got} samples, expected {expected}")]
    IncompleteWindow { got: usize, expected: usize },
    #[error("calibration needs both classes; found {high} high and {low} low windows")]
    SingleClass { high: usize, low: usize },
    #[error("calibration needs >= 2 high and >= 2 low blocks; found {high} high and {low} low")]
    TooFewBlocks { high: usize, low: usize },
    #[error("{0}")]
    Parse(String),
}

/// Labelled stimulation block, seconds on the recording clock.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct EventBlock<T> {
    pub onset: T,
    pub duration: T,
    pub condition: String,
}

impl<T: Real> EventBlock<T> {
    pub fn new(onset: T, duration: T, condition: impl Into<String>) -> Self {
        Self { onset, duration, condition: condition.into() }
    }

    pub fn end(&self) -> T {
        self.onset + self.duration
    }
}
