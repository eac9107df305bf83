//! Contrast t-statistics, Benjamini-Hochberg control and the probe map.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::fit::GlmFit;
use super::GlmError;
use crate::fnirs::probe::{ProbeLayout, Region};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ChannelStat<T> {
    /// 1-based channel number.
    pub channel: usize,
    /// c'β in µM.
    pub contrast: T,
    pub t: T,
    /// Two-sided, uncorrected.
    pub p: T,
    /// Benjamini-Hochberg adjusted p.
    pub q: T,
    pub significant: bool,
}

/// Two-sided p-value of `t` under Student's t with `dof` degrees of freedom.
pub fn two_sided_p(t: f64, dof: usize) -> f64 {
    let dist = StudentsT::new(0.0, 1.0, dof as f64).expect("positive dof");
    (2.0 * dist.sf(t.abs())).min(1.0)
}

/// Two-sided critical |t| at level `alpha`.
pub fn t_critical(alpha: f64, dof: usize) -> f64 {
    let dist = StudentsT::new(0.0, 1.0, dof as f64).expect("positive dof");
    dist.inverse_cdf(1.0 - alpha / 2.0)
}

/// Benjamini-Hochberg adjusted p-values, in input order.
pub fn benjamini_hochberg(p: &[f64]) -> Vec<f64> {
    let m = p.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p[a].partial_cmp(&p[b]).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b)));
    let mut q = vec![1.0; m];
    let mut running = 1.0f64;
    for (rank, &i) in order.iter().enumerate().rev() {
        running = running.min(p[i] * m as f64 / (rank + 1) as f64);
        q[i] = running.min(1.0);
    }
    q
}

/// `t = c'β / √(c' Cov c)` per channel; significance by BH at `alpha`.
pub fn contrast_t<T: Real>(fit: &GlmFit<T>, c: &[T], alpha: f64) -> Result<Vec<ChannelStat<T>>, GlmError> {
    let expected = fit.names.len();
    if c.len() != expected {
        return Err(GlmError::ContrastLength { got: c.len(), expected });
    }
    let mut raw = Vec::with_capacity(fit.channels.len());
    for (i, ch) in fit.channels.iter().enumerate() {
        let effect: T = c.iter().zip(&ch.beta).map(|(a, b)| *a * *b).sum();
        let var = ch.covariance.quad_form(c);
        if !(var > T::zero()) {
            return Err(GlmError::ZeroContrastVariance(i + 1));
        }
        let t = effect / var.sqrt();
        raw.push((effect, t, two_sided_p(t.as_f64(), ch.dof)));
    }
    let p: Vec<f64> = raw.iter().map(|r| r.2).collect();
    let q = benjamini_hochberg(&p);
    Ok(raw
        .into_iter()
        .zip(q)
        .enumerate()
        .map(|(i, ((contrast, t, p), q))| ChannelStat {
            channel: i + 1,
            contrast,
            t,
            p: T::lit(p),
            q: T::lit(q),
            significant: q < alpha,
        })
        .collect())
}

/// Stats CSV: `channel,beta,t,p,significant`.
pub fn stats_csv<T: Real>(stats: &[ChannelStat<T>]) -> String {
    let mut out = String::from("channel,beta,t,p,significant\n");
    for s in stats {
        let _ = writeln!(out, "{},{},{},{},{}", s.channel, s.contrast, s.t, s.p, s.significant);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ProbeMapEntry<T> {
    pub channel: usize,
    pub x: T,
    pub y: T,
    pub region: Region,
    pub t: T,
    /// |t| / max |t|, in [0, 1].
    pub magnitude: T,
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ProbeMap<T> {
    pub entries: Vec<ProbeMapEntry<T>>,
}

pub fn stat_map<T: Real>(stats: &[ChannelStat<T>], layout: &ProbeLayout<T>) -> Result<ProbeMap<T>, GlmError> {
    if stats.len() != layout.channels.len() {
        return Err(GlmError::Parse(format!("expected {} stats, got {}", layout.channels.len(), stats.len())));
    }
    let max = stats.iter().map(|s| s.t.abs()).fold(T::zero(), T::max);
    let entries = stats
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let pos = layout.channel_position(i);
            ProbeMapEntry {
                channel: s.channel,
                x: pos.x,
                y: pos.y,
                region: layout.channels[i].region,
                t: s.t,
                magnitude: if max > T::zero() { s.t.abs() / max } else { T::zero() },
                significant: s.significant,
            }
        })
        .collect();
    Ok(ProbeMap { entries })
}

const PROBE_MAP_HEADER: &str = "channel,x,y,region,t,magnitude,significant";

impl<T: Real> ProbeMap<T> {
    pub fn to_csv(&self) -> String {
        let mut out = format!("{PROBE_MAP_HEADER}\n");
        for e in &self.entries {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                e.channel,
                e.x,
                e.y,
                e.region.as_str(),
                e.t,
                e.magnitude,
                e.significant
            );
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self, GlmError> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == PROBE_MAP_HEADER => {}
            _ => return Err(GlmError::Parse(format!("line 1: expected header `{PROBE_MAP_HEADER}`"))),
        }
        let mut entries = Vec::new();
        for (i, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let ln = i + 1;
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            if f.len() != 7 {
                return Err(GlmError::Parse(format!("line {ln}: expected 7 fields")));
            }
            let num = |s: &str| s.parse::<T>().map_err(|_| GlmError::Parse(format!("line {ln}: bad number {s:?}")));
            entries.push(ProbeMapEntry {
                channel: f[0].parse().map_err(|_| GlmError::Parse(format!("line {ln}: bad channel")))?,
                x: num(f[1])?,
                y: num(f[2])?,
                region: f[3].parse().map_err(|e: String| GlmError::Parse(format!("line {ln}: {e}")))?,
                t: num(f[4])?,
                magnitude: num(f[5])?,
                significant: f[6].parse().map_err(|_| GlmError::Parse(format!("line {ln}: bad flag")))?,
            });
        }
        Ok(Self { entries })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::glm::fit::ChannelFit;
    use crate::linalg::Matrix;

    fn stat(channel: usize, t: f64) -> ChannelStat<f64> {
        ChannelStat { channel, contrast: t, t, p: 0.5, q: 0.5, significant: false }
    }

    fn tiny_fit() -> GlmFit<f64> {
        let cov = Matrix::from_row_major(2, 2, vec![0.04, 0.01, 0.01, 0.09]);
        GlmFit {
            names: vec!["a".into(), "intercept".into()],
            chromophore: Default::default(),
            channels: vec![
                ChannelFit { beta: vec![0.6, 1.0], covariance: cov.clone(), rho: 0.0, residual_variance: 1.0, dof: 100 };
                3
            ],
        }
    }

    #[test]
    fn zero_contrast_is_rejected() {
        assert_eq!(contrast_t(&tiny_fit(), &[0.0, 0.0], 0.05).unwrap_err(), GlmError::ZeroContrastVariance(1));
        assert!(matches!(contrast_t(&tiny_fit(), &[1.0], 0.05), Err(GlmError::ContrastLength { .. })));
    }

    #[test]
    fn t_is_scale_invariant() {
        let a = contrast_t(&tiny_fit(), &[1.0, 0.0], 0.05).unwrap();
        let b = contrast_t(&tiny_fit(), &[2.0, 0.0], 0.05).unwrap();
        let c = contrast_t(&tiny_fit(), &[-0.5, 0.0], 0.05).unwrap();
        assert!((a[0].t - 3.0).abs() < 1e-12);
        assert!((a[0].t - b[0].t).abs() < 1e-12 && a[0].p == b[0].p);
        assert!((a[0].t + c[0].t).abs() < 1e-12 && (a[0].p - c[0].p).abs() < 1e-15);
    }

    #[test]
    fn bh_matches_hand_computation() {
        // sorted p: 0.01, 0.02, 0.03, 0.5 with m = 4 → 0.04, 0.04, 0.04, 0.5
        let q = benjamini_hochberg(&[0.03, 0.5, 0.01, 0.02]);
        let expect = [0.04, 0.5, 0.04, 0.04];
        for (a, b) in q.iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn p_values_follow_student_t() {
        assert!((two_sided_p(0.0, 30) - 1.0).abs() < 1e-12);
        let crit = t_critical(0.05, 30);
        assert!((crit - 2.042_272_456).abs() < 1e-6);
        assert!((two_sided_p(crit, 30) - 0.05).abs() < 1e-9);
        assert!((two_sided_p(2.228_138_852, 10) - 0.05).abs() < 1e-8);
    }

    #[test]
    fn probe_map_magnitudes() {
        let layout = ProbeLayout::<f64>::default();
        let equal: Vec<_> = (1..=23).map(|c| stat(c, 2.0)).collect();
        let map = stat_map(&equal, &layout).unwrap();
        assert!(map.entries.iter().all(|e| e.magnitude == 1.0));

        let mut one: Vec<_> = (1..=23).map(|c| stat(c, 0.0)).collect();
        one[5].t = -4.0;
        let map = stat_map(&one, &layout).unwrap();
        let lit: Vec<_> = map.entries.iter().filter(|e| e.magnitude > 0.0).collect();
        assert_eq!(lit.len(), 1);
        assert_eq!((lit[0].channel, lit[0].magnitude), (6, 1.0));
    }

    #[test]
    fn probe_map_csv_round_trip() {
        let layout = ProbeLayout::<f64>::default();
        let stats: Vec<_> = (1..=23).map(|c| stat(c, (c as f64).sin() * 3.3)).collect();
        let map = stat_map(&stats, &layout).unwrap();
        assert_eq!(ProbeMap::from_csv(&map.to_csv()).unwrap(), map);
    }

    #[test]
    fn stats_csv_header() {
        let csv = stats_csv(&[stat(1, 2.5)]);
        assert_eq!(csv, "channel,beta,t,p,significant\n1,2.5,2.5,0.5,false\n");
    }
}
