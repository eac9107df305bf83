//! Windowed workload index: logistic model over left-DLPFC features, with a
//! z-score fallback when no calibration is available.
//!
//! Features of a window, computed on the average of the left-DLPFC channels:
//! mean HbO and least-squares HbO slope (µM/s), optionally followed by the
//! same two features for HbR.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::{EventBlock, GlmError};
use crate::fnirs::probe::ProbeLayout;
use crate::fnirs::stream::Sample;
use crate::fnirs::HemoTimeSeries;
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real", default)]
pub struct WorkloadConfig<T> {
    pub window_s: T,
    pub step_s: T,
    /// Seconds of signal collected as the z-score baseline when uncalibrated.
    pub baseline_s: T,
    pub include_hbr: bool,
    /// L2 penalty of the logistic fit.
    pub l2: T,
}

impl<T: Real> Default for WorkloadConfig<T> {
    fn default() -> Self {
        Self {
            window_s: T::lit(15.0),
            step_s: T::lit(1.0),
            baseline_s: T::lit(30.0),
            include_hbr: false,
            l2: T::lit(1e-2),
        }
    }
}

impl<T: Real> WorkloadConfig<T> {
    pub fn window_samples(&self, rate: T) -> usize {
        (self.window_s * rate).round().to_usize().unwrap_or(0).max(2)
    }

    pub fn step_samples(&self, rate: T) -> usize {
        (self.step_s * rate).round().to_usize().unwrap_or(0).max(1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IndexBasis {
    Zscore,
    LogisticModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct WorkloadIndex<T> {
    pub timestamp: T,
    pub value: T,
    pub window: T,
    pub basis: IndexBasis,
}

pub fn logistic<T: Real>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

fn mean<T: Real>(v: &[T]) -> T {
    v.iter().copied().sum::<T>() / T::from_usize_lossy(v.len().max(1))
}

/// Sample-wise average over `channels`.
pub fn channel_average<T: Real>(trace: &[Vec<T>], channels: &[usize]) -> Vec<T> {
    let n = trace.first().map_or(0, Vec::len);
    let k = T::from_usize_lossy(channels.len().max(1));
    (0..n).map(|i| channels.iter().map(|&c| trace[c][i]).sum::<T>() / k).collect()
}

/// Least-squares slope of `v` against time at `rate` Hz.
pub fn slope<T: Real>(v: &[T], rate: T) -> T {
    let n = v.len();
    if n < 2 {
        return T::zero();
    }
    let tm = T::from_usize_lossy(n - 1) / T::lit(2.0);
    let vm = mean(v);
    let (mut sxy, mut sxx) = (T::zero(), T::zero());
    for (i, y) in v.iter().enumerate() {
        let dx = T::from_usize_lossy(i) - tm;
        sxy = sxy + dx * (*y - vm);
        sxx = sxx + dx * dx;
    }
    sxy / sxx * rate
}

pub fn window_features<T: Real>(window: &HemoTimeSeries<T>, channels: &[usize], include_hbr: bool) -> Vec<T> {
    let o = channel_average(&window.hbo, channels);
    let mut f = vec![mean(&o), slope(&o, window.sample_rate)];
    if include_hbr {
        let r = channel_average(&window.hbr, channels);
        f.push(mean(&r));
        f.push(slope(&r, window.sample_rate));
    }
    f
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CalibrationSet<T> {
    pub features: Vec<Vec<T>>,
    /// `true` = high workload.
    pub labels: Vec<bool>,
}

impl<T: Real> CalibrationSet<T> {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn class_counts(&self) -> (usize, usize) {
        let high = self.labels.iter().filter(|l| **l).count();
        (high, self.labels.len() - high)
    }

    /// Slides the window over `series` and keeps windows lying wholly inside
    /// one labelled block.
    pub fn from_series(
        series: &HemoTimeSeries<T>,
        blocks: &[EventBlock<T>],
        high_conditions: &[String],
        channels: &[usize],
        config: &WorkloadConfig<T>,
    ) -> Self {
        let rate = series.sample_rate;
        let w = config.window_samples(rate);
        let step = config.step_samples(rate);
        let mut set = Self::default();
        let mut start = 0;
        while start + w <= series.len() {
            let t0 = series.time(start);
            let t1 = series.time(start + w - 1);
            if let Some(b) = blocks.iter().find(|b| t0 >= b.onset && t1 < b.end()) {
                let window = series.slice(start, start + w);
                set.features.push(window_features(&window, channels, config.include_hbr));
                set.labels.push(high_conditions.contains(&b.condition));
            }
            start += step;
        }
        set
    }
}

/// L2-penalised logistic regression on standardised features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct LogisticModel<T> {
    /// Bias first, then one weight per standardised feature.
    pub weights: Vec<T>,
    pub feature_mean: Vec<T>,
    pub feature_scale: Vec<T>,
    pub l2: T,
    pub iterations: usize,
}

/// Standardised design with a leading column of ones.
fn standardise<T: Real>(features: &[Vec<T>], mean: &[T], scale: &[T]) -> Vec<Vec<T>> {
    features
        .iter()
        .map(|f| {
            std::iter::once(T::one())
                .chain(f.iter().zip(mean).zip(scale).map(|((v, m), s)| (*v - *m) / *s))
                .collect()
        })
        .collect()
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(x, y)| *x * *y).sum()
}

/// Mean penalised log-likelihood.
pub fn objective<T: Real>(w: &[T], z: &[Vec<T>], y: &[bool], l2: T) -> T {
    let n = T::from_usize_lossy(z.len());
    let ll: T = z
        .iter()
        .zip(y)
        .map(|(row, &label)| {
            let s = dot(w, row);
            // log(1 + e^s), stable for both signs
            let softplus = s.max(T::zero()) + (-s.abs()).exp().ln_1p();
            (if label { s } else { T::zero() }) - softplus
        })
        .sum();
    ll / n - l2 * T::lit(0.5) * dot(w, w)
}

pub fn gradient<T: Real>(w: &[T], z: &[Vec<T>], y: &[bool], l2: T) -> Vec<T> {
    let n = T::from_usize_lossy(z.len());
    let mut g = vec![T::zero(); w.len()];
    for (row, &label) in z.iter().zip(y) {
        let r = (if label { T::one() } else { T::zero() }) - logistic(dot(w, row));
        for (gj, xj) in g.iter_mut().zip(row) {
            *gj = *gj + r * *xj;
        }
    }
    g.iter().zip(w).map(|(gj, wj)| *gj / n - l2 * *wj).collect()
}

const GRADIENT_TOLERANCE: f64 = 1e-10;
const MAX_ITERATIONS: usize = 200_000;

impl<T: Real> LogisticModel<T> {
    /// Gradient ascent with step `1/L`, `L` bounding the Hessian norm.
    pub fn fit(set: &CalibrationSet<T>, l2: T) -> Result<Self, GlmError> {
        let (high, low) = set.class_counts();
        if high == 0 || low == 0 {
            return Err(GlmError::SingleClass { high, low });
        }
        let d = set.features[0].len();
        let feature_mean: Vec<T> = (0..d).map(|j| mean(&set.features.iter().map(|f| f[j]).collect::<Vec<_>>())).collect();
        let feature_scale: Vec<T> = (0..d)
            .map(|j| {
                let var = mean(&set.features.iter().map(|f| (f[j] - feature_mean[j]).powi(2)).collect::<Vec<_>>());
                if var > T::zero() { var.sqrt() } else { T::one() }
            })
            .collect();
        let z = standardise(&set.features, &feature_mean, &feature_scale);
        let frob: T = z.iter().flatten().map(|v| *v * *v).sum::<T>() / T::from_usize_lossy(z.len());
        let step = T::one() / (T::lit(0.25) * frob + l2);

        let mut w = vec![T::zero(); d + 1];
        let mut iterations = 0;
        while iterations < MAX_ITERATIONS {
            let g = gradient(&w, &z, &set.labels, l2);
            if dot(&g, &g).sqrt() < T::lit(GRADIENT_TOLERANCE) {
                break;
            }
            for (wj, gj) in w.iter_mut().zip(&g) {
                *wj = *wj + step * *gj;
            }
            iterations += 1;
        }
        Ok(Self { weights: w, feature_mean, feature_scale, l2, iterations })
    }

    pub fn standardised(&self, features: &[T]) -> Vec<T> {
        standardise(&[features.to_vec()], &self.feature_mean, &self.feature_scale).remove(0)
    }

    pub fn probability(&self, features: &[T]) -> T {
        logistic(dot(&self.weights, &self.standardised(features)))
    }

    pub fn accuracy(&self, set: &CalibrationSet<T>) -> T {
        let correct = set
            .features
            .iter()
            .zip(&set.labels)
            .filter(|(f, l)| (self.probability(f) >= T::lit(0.5)) == **l)
            .count();
        T::from_usize_lossy(correct) / T::from_usize_lossy(set.len().max(1))
    }

    /// Gradient of the training objective at the fitted weights.
    pub fn training_gradient(&self, set: &CalibrationSet<T>) -> Vec<T> {
        let z = standardise(&set.features, &self.feature_mean, &self.feature_scale);
        gradient(&self.weights, &z, &set.labels, self.l2)
    }
}

/// Mean held-out accuracy over `k` contiguous folds.
pub fn kfold_accuracy<T: Real>(set: &CalibrationSet<T>, k: usize, l2: T) -> Result<T, GlmError> {
    let n = set.len();
    let k = k.clamp(2, n.max(2));
    let mut acc = T::zero();
    let mut folds = 0;
    for f in 0..k {
        let (lo, hi) = (f * n / k, (f + 1) * n / k);
        if lo == hi {
            continue;
        }
        let mut train = CalibrationSet::default();
        let mut test = CalibrationSet::default();
        for i in 0..n {
            let dst = if (lo..hi).contains(&i) { &mut test } else { &mut train };
            dst.features.push(set.features[i].clone());
            dst.labels.push(set.labels[i]);
        }
        let model = LogisticModel::fit(&train, l2)?;
        acc = acc + model.accuracy(&test);
        folds += 1;
    }
    Ok(acc / T::from_usize_lossy(folds))
}

/// Resting statistics of the left-DLPFC average HbO, per sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Baseline<T> {
    pub mean: T,
    pub sd: T,
}

impl<T: Real> Baseline<T> {
    pub fn from_values(v: &[T]) -> Self {
        let m = mean(v);
        let var = v.iter().map(|x| (*x - m).powi(2)).sum::<T>() / T::from_usize_lossy(v.len().saturating_sub(1).max(1));
        let sd = if var > T::zero() { var.sqrt() } else { T::one() };
        Self { mean: m, sd }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct WorkloadModel<T> {
    pub config: WorkloadConfig<T>,
    /// 0-based channel indices averaged for the features.
    pub channels: Vec<usize>,
    pub baseline: Baseline<T>,
    pub logistic: Option<LogisticModel<T>>,
}

impl<T: Real> WorkloadModel<T> {
    /// Uncalibrated model using only the z-score path.
    pub fn fallback(config: WorkloadConfig<T>, channels: Vec<usize>, baseline: Baseline<T>) -> Self {
        Self { config, channels, baseline, logistic: None }
    }
}

/// Fits the logistic model on windows inside `labels` blocks and stores
/// the low-class baseline for the fallback path.
pub fn calibrate_classifier<T: Real>(
    calibration: &HemoTimeSeries<T>,
    labels: &[EventBlock<T>],
    high_conditions: &[String],
    layout: &ProbeLayout<T>,
    config: &WorkloadConfig<T>,
) -> Result<WorkloadModel<T>, GlmError> {
    let high_blocks = labels.iter().filter(|b| high_conditions.contains(&b.condition)).count();
    let low_blocks = labels.len() - high_blocks;
    if high_blocks == 0 || low_blocks == 0 {
        return Err(GlmError::SingleClass { high: high_blocks, low: low_blocks });
    }
    if high_blocks < 2 || low_blocks < 2 {
        return Err(GlmError::TooFewBlocks { high: high_blocks, low: low_blocks });
    }
    let channels = layout.left_dlpfc_channels();
    let set = CalibrationSet::from_series(calibration, labels, high_conditions, &channels, config);
    let logistic = LogisticModel::fit(&set, config.l2)?;

    let avg = channel_average(&calibration.hbo, &channels);
    let rest: Vec<T> = avg
        .iter()
        .enumerate()
        .filter(|(i, _)| {
            let t = calibration.time(*i);
            labels.iter().any(|b| !high_conditions.contains(&b.condition) && t >= b.onset && t < b.end())
        })
        .map(|(_, v)| *v)
        .collect();
    Ok(WorkloadModel { config: config.clone(), channels, baseline: Baseline::from_values(&rest), logistic: Some(logistic) })
}

/// Workload index of one complete window, stamped at window completion.
pub fn sliding_workload<T: Real>(window: &HemoTimeSeries<T>, model: &WorkloadModel<T>) -> Result<WorkloadIndex<T>, GlmError> {
    let expected = model.config.window_samples(window.sample_rate);
    if window.len() != expected {
        return Err(GlmError::IncompleteWindow { got: window.len(), expected });
    }
    let features = window_features(window, &model.channels, model.config.include_hbr);
    let (value, basis) = match &model.logistic {
        Some(m) => (m.probability(&features), IndexBasis::LogisticModel),
        None => {
            let z = (features[0] - model.baseline.mean) / model.baseline.sd;
            (logistic(z / T::lit(2.0)), IndexBasis::Zscore)
        }
    };
    Ok(WorkloadIndex {
        timestamp: window.time(window.len() - 1) + T::one() / window.sample_rate,
        value,
        window: model.config.window_s,
        basis,
    })
}

/// Streaming stage: ring buffer of the last window, one index per step.
///
/// Without a calibrated model the first `baseline_s` seconds are collected as
/// the z-score baseline before any index is emitted.
#[derive(Debug, Clone)]
pub struct WorkloadEstimator<T> {
    config: WorkloadConfig<T>,
    channels: Vec<usize>,
    rate: T,
    model: Option<WorkloadModel<T>>,
    buffer: VecDeque<Sample<T>>,
    baseline_values: Vec<T>,
    since_emit: Option<usize>,
}

impl<T: Real> WorkloadEstimator<T> {
    pub fn new(config: WorkloadConfig<T>, layout: &ProbeLayout<T>, rate: T, model: Option<WorkloadModel<T>>) -> Self {
        Self {
            channels: model.as_ref().map_or_else(|| layout.left_dlpfc_channels(), |m| m.channels.clone()),
            config: model.as_ref().map_or(config, |m| m.config.clone()),
            rate,
            model,
            buffer: VecDeque::new(),
            baseline_values: Vec::new(),
            since_emit: None,
        }
    }

    pub fn model(&self) -> Option<&WorkloadModel<T>> {
        self.model.as_ref()
    }

    pub fn push(&mut self, sample: Sample<T>) -> Option<WorkloadIndex<T>> {
        let w = self.config.window_samples(self.rate);
        if self.model.is_none() {
            let v = self.channels.iter().map(|&c| sample.hbo[c]).sum::<T>() / T::from_usize_lossy(self.channels.len());
            self.baseline_values.push(v);
            let need = (self.config.baseline_s * self.rate).round().to_usize().unwrap_or(0).max(2);
            if self.baseline_values.len() >= need {
                let baseline = Baseline::from_values(&self.baseline_values);
                self.model = Some(WorkloadModel::fallback(self.config.clone(), self.channels.clone(), baseline));
            }
        }
        self.buffer.push_back(sample);
        while self.buffer.len() > w {
            self.buffer.pop_front();
        }
        if let Some(n) = self.since_emit.as_mut() {
            *n += 1;
        }
        let model = self.model.as_ref()?;
        if self.buffer.len() < w {
            return None;
        }
        if matches!(self.since_emit, Some(n) if n < self.config.step_samples(self.rate)) {
            return None;
        }
        self.since_emit = Some(0);
        let window = HemoTimeSeries {
            sample_rate: self.rate,
            start_time: self.buffer[0].time,
            hbo: (0..self.buffer[0].hbo.len()).map(|c| self.buffer.iter().map(|s| s.hbo[c]).collect()).collect(),
            hbr: (0..self.buffer[0].hbr.len()).map(|c| self.buffer.iter().map(|s| s.hbr[c]).collect()).collect(),
        };
        sliding_workload(&window, model).ok()
    }
}
