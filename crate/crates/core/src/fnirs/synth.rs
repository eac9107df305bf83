//! Synthetic haemodynamic recordings with known activation.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use serde::{Deserialize, Serialize};

use super::hrf::{block_regressor, Hrf, HrfParams};
use super::probe::ProbeLayout;
use super::{HemoTimeSeries, SignalError};
use crate::scalar::Real;
use crate::swarm::seeded_rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct SynthBlock<T> {
    pub onset: T,
    pub duration: T,
    pub condition: String,
}

/// Nuisance components added on every channel. All amplitudes in µM.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real", default)]
pub struct NoiseModel<T> {
    pub white_sigma: T,
    /// AR(1) coefficient of the measurement noise; the marginal sd stays `white_sigma`.
    pub ar_rho: T,
    pub drift_slope_per_min: T,
    pub cardiac_amplitude: T,
    pub cardiac_frequency: T,
    /// Expected motion spikes per second.
    pub motion_rate: T,
    pub motion_amplitude: T,
    /// Exponential decay constant of a motion spike, seconds.
    pub motion_decay: T,
}

impl<T: Real> Default for NoiseModel<T> {
    fn default() -> Self {
        Self {
            white_sigma: T::zero(),
            ar_rho: T::zero(),
            drift_slope_per_min: T::zero(),
            cardiac_amplitude: T::zero(),
            cardiac_frequency: T::lit(1.1),
            motion_rate: T::zero(),
            motion_amplitude: T::zero(),
            motion_decay: T::lit(2.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct SynthProtocol<T> {
    pub sample_rate: T,
    /// Recording length in seconds.
    pub duration: T,
    #[serde(default)]
    pub start_time: T,
    #[serde(default)]
    pub blocks: Vec<SynthBlock<T>>,
    /// Per-channel HbO amplitude (µM) for each condition label. Conditions
    /// without an entry evoke nothing.
    #[serde(default)]
    pub activation: BTreeMap<String, Vec<T>>,
    /// HbR evoked amplitude as a multiple of the HbO amplitude.
    #[serde(default = "default_hbr_ratio")]
    pub hbr_ratio: T,
    #[serde(default)]
    pub noise: NoiseModel<T>,
    #[serde(default)]
    pub hrf: HrfParams<T>,
    pub rng_seed: u64,
}

fn default_hbr_ratio<T: Real>() -> T {
    T::lit(-1.0 / 3.0)
}

impl<T: Real> SynthProtocol<T> {
    /// Noise-free protocol with no blocks.
    pub fn quiet(sample_rate: T, duration: T, rng_seed: u64) -> Self {
        Self {
            sample_rate,
            duration,
            start_time: T::zero(),
            blocks: Vec::new(),
            activation: BTreeMap::new(),
            hbr_ratio: default_hbr_ratio(),
            noise: NoiseModel::default(),
            hrf: HrfParams::default(),
            rng_seed,
        }
    }

    pub fn n_samples(&self) -> usize {
        (self.duration * self.sample_rate).round().to_usize().unwrap_or(0)
    }

    pub fn validate(&self, channels: usize) -> Result<(), SignalError> {
        let bad = |m: String| Err(SignalError::InvalidProtocol(m));
        if !(self.sample_rate > T::zero()) || !(self.duration > T::zero()) {
            return bad("sample_rate and duration must be positive".into());
        }
        let mut spans: Vec<(T, T)> = Vec::new();
        for b in &self.blocks {
            if b.onset < self.start_time || !(b.duration > T::zero()) {
                return bad(format!("block {:?} at {} has a negative onset or non-positive duration", b.condition, b.onset));
            }
            if b.onset + b.duration > self.start_time + self.duration {
                return bad(format!("block {:?} at {} runs past the recording end", b.condition, b.onset));
            }
            spans.push((b.onset, b.onset + b.duration));
        }
        spans.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite onsets"));
        if let Some(w) = spans.windows(2).find(|w| w[1].0 < w[0].1) {
            return bad(format!("blocks starting at {} and {} overlap", w[0].0, w[1].0));
        }
        for (cond, amps) in &self.activation {
            if amps.len() != channels {
                return bad(format!("activation for {cond:?} has {} entries, expected {channels}", amps.len()));
            }
        }
        let n = &self.noise;
        if n.white_sigma < T::zero() || n.ar_rho.abs() >= T::one() || n.motion_rate < T::zero() || !(n.motion_decay > T::zero()) {
            return bad("noise parameters out of range".into());
        }
        Ok(())
    }

    /// Noise-free evoked HbO response of one channel.
    pub fn evoked(&self, channel: usize, hrf: &Hrf<T>) -> Vec<T> {
        let n = self.n_samples();
        let mut out = vec![T::zero(); n];
        for (cond, amps) in &self.activation {
            let beta = amps[channel];
            if beta == T::zero() {
                continue;
            }
            let spans: Vec<(T, T)> =
                self.blocks.iter().filter(|b| &b.condition == cond).map(|b| (b.onset, b.duration)).collect();
            if spans.is_empty() {
                continue;
            }
            let reg = block_regressor(&spans, self.sample_rate, self.start_time, n, hrf);
            for (o, r) in out.iter_mut().zip(reg) {
                *o = *o + beta * r;
            }
        }
        out
    }
}

fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

fn noise_trace<T: Real, R: Rng + ?Sized>(n: usize, noise: &NoiseModel<T>, rng: &mut R) -> Vec<T> {
    let sigma = noise.white_sigma;
    let rho = noise.ar_rho;
    let innovation = sigma * (T::one() - rho * rho).sqrt();
    let mut out = Vec::with_capacity(n);
    let mut prev = T::zero();
    for i in 0..n {
        let z = T::lit(normal(rng));
        let e = if i == 0 { sigma * z } else { rho * prev + innovation * z };
        out.push(e);
        prev = e;
    }
    out
}

/// Generates every channel as evoked response + drift + cardiac + AR(1)
/// measurement noise + motion spikes. Equal seeds give identical output.
pub fn synth_generate<T: Real>(protocol: &SynthProtocol<T>, layout: &ProbeLayout<T>) -> Result<HemoTimeSeries<T>, SignalError> {
    let channels = layout.channels.len();
    protocol.validate(channels)?;
    let n = protocol.n_samples();
    let rate = protocol.sample_rate;
    let hrf = Hrf::new(protocol.hrf);
    let mut rng = seeded_rng(protocol.rng_seed);
    let noise = &protocol.noise;
    let times: Vec<T> = (0..n).map(|i| T::from_usize_lossy(i) / rate).collect();

    // motion spike onsets, shared by every channel
    let mut spikes: Vec<T> = Vec::new();
    if noise.motion_rate > T::zero() && noise.motion_amplitude != T::zero() {
        let exp = Exp::new(noise.motion_rate.as_f64()).expect("positive rate");
        let mut t = 0.0;
        let end = protocol.duration.as_f64();
        loop {
            t += exp.sample(&mut rng);
            if t >= end {
                break;
            }
            spikes.push(T::lit(t));
        }
    }
    let motion = |t: T| -> T {
        spikes
            .iter()
            .filter(|&&s| s <= t)
            .map(|&s| noise.motion_amplitude * (-(t - s) / noise.motion_decay).exp())
            .sum()
    };
    let drift_per_s = noise.drift_slope_per_min / T::lit(60.0);
    let two_pi = T::lit(std::f64::consts::TAU);

    let mut hbo = Vec::with_capacity(channels);
    let mut hbr = Vec::with_capacity(channels);
    for ch in 0..channels {
        let evoked = protocol.evoked(ch, &hrf);
        let phase = T::lit(rng.random::<f64>()) * two_pi;
        let nuisance: Vec<T> = times
            .iter()
            .map(|&t| {
                drift_per_s * t
                    + noise.cardiac_amplitude * (two_pi * noise.cardiac_frequency * t + phase).sin()
                    + if spikes.is_empty() { T::zero() } else { motion(t) }
            })
            .collect();
        let o_noise = noise_trace(n, noise, &mut rng);
        let r_noise = noise_trace(n, noise, &mut rng);
        hbo.push((0..n).map(|i| evoked[i] + nuisance[i] + o_noise[i]).collect());
        hbr.push(
            (0..n)
                .map(|i| protocol.hbr_ratio * evoked[i] - T::lit(0.5) * nuisance[i] + r_noise[i])
                .collect(),
        );
    }
    Ok(HemoTimeSeries { sample_rate: rate, start_time: protocol.start_time, hbo, hbr })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn layout() -> ProbeLayout<f64> {
        ProbeLayout::default()
    }

    fn one_block(beta: f64) -> SynthProtocol<f64> {
        let mut p = SynthProtocol::quiet(10.0, 60.0, 3);
        p.blocks.push(SynthBlock { onset: 10.0, duration: 10.0, condition: "task".into() });
        p.activation.insert("task".into(), vec![beta; 23]);
        p
    }

    #[test]
    fn silent_protocol_is_all_zero() {
        let s = synth_generate(&SynthProtocol::quiet(10.0, 30.0, 1), &layout()).unwrap();
        assert_eq!(s.len(), 300);
        assert!(s.hbo.iter().chain(&s.hbr).flatten().all(|v| *v == 0.0));
    }

    #[test]
    fn noiseless_block_equals_regressor() {
        let p = one_block(1.0);
        let s = synth_generate(&p, &layout()).unwrap();
        let reg = block_regressor(&[(10.0, 10.0)], 10.0, 0.0, 600, &Hrf::default());
        assert_eq!(s.hbo[4], reg);
    }

    #[test]
    fn evoked_scales_linearly() {
        let a = synth_generate(&one_block(1.0), &layout()).unwrap();
        let b = synth_generate(&one_block(2.0), &layout()).unwrap();
        for (x, y) in a.hbo.iter().flatten().zip(b.hbo.iter().flatten()) {
            assert_eq!(2.0 * x, *y);
        }
    }

    #[test]
    fn seeded_output_is_bit_identical() {
        let mut p = one_block(1.0);
        p.noise = NoiseModel {
            white_sigma: 0.3,
            ar_rho: 0.4,
            drift_slope_per_min: 0.01,
            cardiac_amplitude: 0.1,
            motion_rate: 0.05,
            motion_amplitude: 0.5,
            ..NoiseModel::default()
        };
        let a = synth_generate(&p, &layout()).unwrap();
        let b = synth_generate(&p, &layout()).unwrap();
        assert_eq!(a, b);
        p.rng_seed += 1;
        assert_ne!(a, synth_generate(&p, &layout()).unwrap());
    }

    #[test]
    fn rejects_overlapping_blocks() {
        let mut p = one_block(1.0);
        p.blocks.push(SynthBlock { onset: 15.0, duration: 10.0, condition: "other".into() });
        assert!(matches!(synth_generate(&p, &layout()), Err(SignalError::InvalidProtocol(_))));
        let mut p = one_block(1.0);
        p.blocks[0].duration = 100.0;
        assert!(synth_generate(&p, &layout()).is_err());
    }

    #[test]
    fn rejects_short_activation_vector() {
        let mut p = one_block(1.0);
        p.activation.insert("task".into(), vec![1.0; 5]);
        assert!(synth_generate(&p, &layout()).is_err());
    }
}
