//! Canonical double-gamma haemodynamic response and block regressors.

use serde::{Deserialize, Serialize};

use crate::scalar::{ln_gamma, Real};

/// Double-gamma shape. Delays are the modes of the two gamma kernels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real", default)]
pub struct HrfParams<T> {
    pub peak_delay: T,
    pub undershoot_delay: T,
    pub peak_dispersion: T,
    pub undershoot_dispersion: T,
    /// Peak-to-undershoot amplitude ratio.
    pub ratio: T,
    /// Kernel support in seconds.
    pub length: T,
}

impl<T: Real> Default for HrfParams<T> {
    fn default() -> Self {
        Self {
            peak_delay: T::lit(6.0),
            undershoot_delay: T::lit(16.0),
            peak_dispersion: T::lit(1.0),
            undershoot_dispersion: T::lit(1.0),
            ratio: T::lit(6.0),
            length: T::lit(32.0),
        }
    }
}

fn gamma_pdf<T: Real>(t: T, shape: T, scale: T) -> T {
    if t <= T::zero() {
        return T::zero();
    }
    ((shape - T::one()) * t.ln() - t / scale - ln_gamma(shape) - shape * scale.ln()).exp()
}

/// Canonical HRF normalised to unit peak.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hrf<T> {
    params: HrfParams<T>,
    peak: T,
}

impl<T: Real> Default for Hrf<T> {
    fn default() -> Self {
        Self::new(HrfParams::default())
    }
}

impl<T: Real> Hrf<T> {
    pub fn new(params: HrfParams<T>) -> Self {
        let mut hrf = Self { params, peak: T::one() };
        hrf.peak = hrf.raw(hrf.locate_peak());
        hrf
    }

    pub fn params(&self) -> &HrfParams<T> {
        &self.params
    }

    fn raw(&self, t: T) -> T {
        let p = &self.params;
        let k1 = p.peak_delay / p.peak_dispersion + T::one();
        let k2 = p.undershoot_delay / p.undershoot_dispersion + T::one();
        gamma_pdf(t, k1, p.peak_dispersion) - gamma_pdf(t, k2, p.undershoot_dispersion) / p.ratio
    }

    /// Time of the global maximum: coarse scan then golden-section refinement.
    fn locate_peak(&self) -> T {
        let step = T::lit(0.01);
        let steps = (self.params.length / step).ceil().to_usize().unwrap_or(0);
        let mut best = (T::zero(), T::neg_infinity());
        for i in 0..=steps {
            let t = T::from_usize_lossy(i) * step;
            let v = self.raw(t);
            if v > best.1 {
                best = (t, v);
            }
        }
        let (mut a, mut b) = ((best.0 - step).max(T::zero()), best.0 + step);
        let g = T::lit(0.618_033_988_749_894_8);
        for _ in 0..100 {
            let c = b - g * (b - a);
            let d = a + g * (b - a);
            if self.raw(c) > self.raw(d) {
                b = d;
            } else {
                a = c;
            }
        }
        (a + b) * T::lit(0.5)
    }

    /// Amplitude at `t` seconds after an impulse; zero for `t <= 0`.
    pub fn eval(&self, t: T) -> T {
        self.raw(t) / self.peak
    }

    /// Kernel sampled at `rate` Hz over `[0, length)`.
    pub fn kernel(&self, rate: T) -> Vec<T> {
        let n = (self.params.length * rate).ceil().to_usize().unwrap_or(0);
        (0..n).map(|k| self.eval(T::from_usize_lossy(k) / rate)).collect()
    }
}

/// Whether `t` falls inside the half-open block `[onset, onset + duration)`.
pub fn in_block<T: Real>(t: T, onset: T, duration: T) -> bool {
    t >= onset && t < onset + duration
}

/// HRF-convolved boxcar of `blocks` (onset, duration) sampled at
/// `start_time + i / rate`, scaled so a sustained block plateaus at 1.
///
/// The boxcar is decomposed into its step edges and each edge contributes a
/// shifted copy of the cumulative kernel.
pub fn block_regressor<T: Real>(blocks: &[(T, T)], rate: T, start_time: T, n_samples: usize, hrf: &Hrf<T>) -> Vec<T> {
    let kernel = hrf.kernel(rate);
    let total: T = kernel.iter().copied().sum();
    let mut cumulative = Vec::with_capacity(kernel.len());
    let mut acc = T::zero();
    for k in &kernel {
        acc = acc + *k;
        cumulative.push(acc / total);
    }
    let step_response = |lag: usize| cumulative.get(lag).copied().unwrap_or(T::one());

    let boxcar: Vec<bool> = (0..n_samples)
        .map(|i| {
            let t = start_time + T::from_usize_lossy(i) / rate;
            blocks.iter().any(|&(on, dur)| in_block(t, on, dur))
        })
        .collect();
    let mut edges: Vec<(usize, T)> = Vec::new();
    let mut prev = false;
    for (i, &b) in boxcar.iter().enumerate() {
        if b != prev {
            edges.push((i, if b { T::one() } else { -T::one() }));
            prev = b;
        }
    }
    (0..n_samples)
        .map(|i| {
            edges
                .iter()
                .take_while(|(at, _)| *at <= i)
                .map(|&(at, sign)| sign * step_response(i - at))
                .sum()
        })
        .collect()
}
