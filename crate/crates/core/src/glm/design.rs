//! Design matrices: HRF-convolved condition boxcars, Legendre drifts, intercept.

use std::collections::BTreeSet;

use super::{EventBlock, GlmError, BASELINE_CONDITION};
use crate::fnirs::hrf::{block_regressor, Hrf};
use crate::linalg::{Matrix, Qr};
use crate::scalar::Real;

pub const INTERCEPT: &str = "intercept";

#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix<T> {
    /// Column names: conditions (sorted), `drift_1..drift_k`, `intercept`.
    pub names: Vec<String>,
    pub matrix: Matrix<T>,
    pub sample_rate: T,
    pub start_time: T,
}

impl<T: Real> DesignMatrix<T> {
    pub fn rows(&self) -> usize {
        self.matrix.rows()
    }

    pub fn cols(&self) -> usize {
        self.matrix.cols()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Condition columns only.
    pub fn conditions(&self) -> Vec<String> {
        self.names.iter().filter(|n| *n != INTERCEPT && !n.starts_with("drift_")).cloned().collect()
    }

    /// Contrast vector `positive - negative`. The baseline condition or
    /// `None` as `negative` compares against the implicit baseline.
    pub fn contrast(&self, positive: &str, negative: Option<&str>) -> Result<Vec<T>, GlmError> {
        let unknown = |name: &str| GlmError::UnknownCondition {
            name: name.to_owned(),
            available: std::iter::once(BASELINE_CONDITION.to_owned()).chain(self.conditions()).collect(),
        };
        let mut c = vec![T::zero(); self.cols()];
        if positive != BASELINE_CONDITION {
            let i = self.conditions().iter().position(|n| n == positive).ok_or_else(|| unknown(positive))?;
            c[i] = c[i] + T::one();
        }
        if let Some(neg) = negative.filter(|n| *n != BASELINE_CONDITION) {
            let i = self.conditions().iter().position(|n| n == neg).ok_or_else(|| unknown(neg))?;
            c[i] = c[i] - T::one();
        }
        Ok(c)
    }
}

/// Legendre polynomials P_1..=P_order on `n` points spread over [-1, 1].
pub fn legendre_drifts<T: Real>(n: usize, order: usize) -> Vec<Vec<T>> {
    let mut out = Vec::with_capacity(order);
    if order == 0 {
        return out;
    }
    let denom = T::from_usize_lossy(n.saturating_sub(1).max(1));
    let x: Vec<T> = (0..n).map(|i| T::lit(2.0) * T::from_usize_lossy(i) / denom - T::one()).collect();
    let mut prev = vec![T::one(); n];
    let mut cur = x.clone();
    out.push(cur.clone());
    for k in 1..order {
        let kf = T::from_usize_lossy(k);
        let next: Vec<T> = (0..n)
            .map(|i| ((T::lit(2.0) * kf + T::one()) * x[i] * cur[i] - kf * prev[i]) / (kf + T::one()))
            .collect();
        prev = std::mem::replace(&mut cur, next);
        out.push(cur.clone());
    }
    out
}

pub fn build_design<T: Real>(
    events: &[EventBlock<T>],
    rate: T,
    start_time: T,
    n_samples: usize,
    drift_order: usize,
) -> Result<DesignMatrix<T>, GlmError> {
    build_design_with_hrf(events, rate, start_time, n_samples, drift_order, &Hrf::default())
}

pub fn build_design_with_hrf<T: Real>(
    events: &[EventBlock<T>],
    rate: T,
    start_time: T,
    n_samples: usize,
    drift_order: usize,
    hrf: &Hrf<T>,
) -> Result<DesignMatrix<T>, GlmError> {
    let end = start_time + T::from_usize_lossy(n_samples) / rate;
    for e in events {
        if e.onset < T::zero() || !(e.duration > T::zero()) {
            return Err(GlmError::InvalidEvent { condition: e.condition.clone(), onset: e.onset.as_f64() });
        }
        if e.onset < start_time || e.onset > end {
            return Err(GlmError::EventOutOfRange {
                condition: e.condition.clone(),
                onset: e.onset.as_f64(),
                start: start_time.as_f64(),
                end: end.as_f64(),
            });
        }
    }
    let conditions: BTreeSet<&str> =
        events.iter().map(|e| e.condition.as_str()).filter(|c| *c != BASELINE_CONDITION).collect();

    let mut names = Vec::new();
    let mut columns = Vec::new();
    for cond in &conditions {
        let spans: Vec<(T, T)> =
            events.iter().filter(|e| e.condition == *cond).map(|e| (e.onset, e.duration)).collect();
        names.push((*cond).to_owned());
        columns.push(block_regressor(&spans, rate, start_time, n_samples, hrf));
    }
    for (k, d) in legendre_drifts(n_samples, drift_order).into_iter().enumerate() {
        names.push(format!("drift_{}", k + 1));
        columns.push(d);
    }
    names.push(INTERCEPT.to_owned());
    columns.push(vec![T::one(); n_samples]);

    let matrix = Matrix::from_columns(&columns);
    if let Some(j) = Qr::new(&matrix).first_dependent_column() {
        let column = names.get(j).cloned().unwrap_or_else(|| format!("#{j} (fewer rows than columns)"));
        return Err(GlmError::RankDeficient { column });
    }
    Ok(DesignMatrix { names, matrix, sample_rate: rate, start_time })
}
