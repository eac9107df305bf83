//! Per-channel least squares with one-pass AR(1) prewhitening.
//!
//! 1. OLS fit of the raw channel.
//! 2. ρ from the lag-1 autocorrelation of the OLS residuals.
//! 3. Quasi-difference rows of y and X: `z_t - ρ z_{t-1}` for t ≥ 1, and
//!    `√(1-ρ²) z_0` for the first row so the row count is preserved.
//! 4. OLS on the whitened system; `Cov(β) = σ̂² (X̃ᵀX̃)⁻¹`.

use super::design::DesignMatrix;
use super::GlmError;
use crate::fnirs::{Chromophore, HemoTimeSeries};
use crate::linalg::{Matrix, Qr};
use crate::scalar::Real;

/// ρ is clamped to this magnitude.
const MAX_RHO: f64 = 0.99;

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelFit<T> {
    pub beta: Vec<T>,
    pub covariance: Matrix<T>,
    pub rho: T,
    pub residual_variance: T,
    pub dof: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlmFit<T> {
    pub names: Vec<String>,
    pub chromophore: Chromophore,
    pub channels: Vec<ChannelFit<T>>,
}

/// Lag-1 autocorrelation `Σ r_t r_{t-1} / Σ r_t²`.
pub fn lag1_autocorrelation<T: Real>(r: &[T]) -> T {
    let denom: T = r.iter().map(|v| *v * *v).sum();
    if denom == T::zero() {
        return T::zero();
    }
    let num: T = r.windows(2).map(|w| w[0] * w[1]).sum();
    num / denom
}

/// Applies the AR(1) quasi-difference to one column.
pub fn quasi_difference<T: Real>(z: &[T], rho: T) -> Vec<T> {
    let mut out = Vec::with_capacity(z.len());
    if let Some(first) = z.first() {
        out.push((T::one() - rho * rho).sqrt() * *first);
    }
    out.extend(z.windows(2).map(|w| w[1] - rho * w[0]));
    out
}

fn residuals<T: Real>(x: &Matrix<T>, y: &[T], beta: &[T]) -> Vec<T> {
    x.mul_vec(beta).iter().zip(y).map(|(f, v)| *v - *f).collect()
}

/// Fits one channel against `x`.
pub fn fit_channel<T: Real>(x: &Matrix<T>, y: &[T]) -> ChannelFit<T> {
    let (n, p) = (x.rows(), x.cols());
    let ols = Qr::new(x).solve(y);
    let rho = lag1_autocorrelation(&residuals(x, y, &ols)).max(T::lit(-MAX_RHO)).min(T::lit(MAX_RHO));

    let whitened_cols: Vec<Vec<T>> = (0..p).map(|j| quasi_difference(&x.column(j), rho)).collect();
    let xw = Matrix::from_columns(&whitened_cols);
    let yw = quasi_difference(y, rho);
    let qr = Qr::new(&xw);
    let beta = qr.solve(&yw);
    let dof = n - p;
    let rss: T = residuals(&xw, &yw, &beta).iter().map(|v| *v * *v).sum();
    let residual_variance = rss / T::from_usize_lossy(dof);
    let mut covariance = qr.gram_inverse();
    for i in 0..p {
        for j in 0..p {
            covariance[(i, j)] = covariance[(i, j)] * residual_variance;
        }
    }
    ChannelFit { beta, covariance, rho, residual_variance, dof }
}

/// Fits every channel of the chosen chromophore.
pub fn fit_glm<T: Real>(
    series: &HemoTimeSeries<T>,
    design: &DesignMatrix<T>,
    chromophore: Chromophore,
) -> Result<GlmFit<T>, GlmError> {
    let (rows, cols) = (design.rows(), design.cols());
    if rows != series.len() {
        return Err(GlmError::LengthMismatch { rows, samples: series.len() });
    }
    if rows <= cols {
        return Err(GlmError::NoDegreesOfFreedom { rows, cols });
    }
    if let Some(j) = Qr::new(&design.matrix).first_dependent_column() {
        return Err(GlmError::RankDeficient { column: design.names[j].clone() });
    }
    let trace = series.trace(chromophore);
    for (c, ch) in trace.iter().enumerate() {
        if let Some(sample) = ch.iter().position(|v| !v.is_finite()) {
            return Err(GlmError::NonFinite { channel: c + 1, sample });
        }
    }
    let channels = trace.iter().map(|y| fit_channel(&design.matrix, y)).collect();
    Ok(GlmFit { names: design.names.clone(), chromophore, channels })
}
