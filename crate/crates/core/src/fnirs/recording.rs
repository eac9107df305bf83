//! Channel CSV files.
//!
//! ```text
//! # rate_hz=10
//! time_s,ch01_hbo,ch01_hbr,...,ch23_hbo,ch23_hbr
//! 0,0.01,-0.002,...
//! ```
//!
//! Raw intensity files use `chNN_<wavelength>nm` columns (two per channel)
//! instead of `_hbo`/`_hbr`. Values are µM for haemoglobin files.

use std::fmt::Write as _;
use std::path::Path;

use super::mbll::RawIntensitySeries;
use super::probe::CHANNEL_COUNT;
use super::{HemoTimeSeries, SignalError};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub enum Recording<T> {
    Hemo(HemoTimeSeries<T>),
    Raw(RawIntensitySeries<T>),
}

fn csv_err(line: usize, message: impl Into<String>) -> SignalError {
    SignalError::Csv { line, message: message.into() }
}

pub fn hemo_to_csv<T: Real>(series: &HemoTimeSeries<T>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# rate_hz={}", series.sample_rate);
    out.push_str("time_s");
    for ch in 1..=series.channels() {
        let _ = write!(out, ",ch{ch:02}_hbo,ch{ch:02}_hbr");
    }
    out.push('\n');
    for i in 0..series.len() {
        let _ = write!(out, "{}", series.time(i));
        for (o, r) in series.hbo.iter().zip(&series.hbr) {
            let _ = write!(out, ",{},{}", o[i], r[i]);
        }
        out.push('\n');
    }
    out
}

pub fn raw_to_csv<T: Real>(series: &RawIntensitySeries<T>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# rate_hz={}", series.sample_rate);
    out.push_str("time_s");
    for ch in 1..=series.samples.len() {
        for w in &series.wavelengths {
            let _ = write!(out, ",ch{ch:02}_{w}nm");
        }
    }
    out.push('\n');
    let n = series.samples.first().map_or(0, |s| s[0].len());
    for i in 0..n {
        let t = series.start_time + T::from_usize_lossy(i) / series.sample_rate;
        let _ = write!(out, "{t}");
        for [a, b] in &series.samples {
            let _ = write!(out, ",{},{}", a[i], b[i]);
        }
        out.push('\n');
    }
    out
}

pub fn write_hemo<T: Real>(series: &HemoTimeSeries<T>, path: impl AsRef<Path>) -> Result<(), SignalError> {
    std::fs::write(path, hemo_to_csv(series))?;
    Ok(())
}

pub fn load_recording<T: Real>(path: impl AsRef<Path>) -> Result<Recording<T>, SignalError> {
    parse_recording(&std::fs::read_to_string(path)?)
}

enum Schema<T> {
    Hemo,
    Raw([T; 2]),
}

fn parse_header<T: Real>(header: &str, line: usize) -> Result<(Schema<T>, usize), SignalError> {
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    if cols.first() != Some(&"time_s") {
        return Err(csv_err(line, "header must start with `time_s`"));
    }
    let data = &cols[1..];
    if data.len() % 2 != 0 {
        return Err(csv_err(line, format!("expected two columns per channel, found {} data columns", data.len())));
    }
    let channels = data.len() / 2;
    let mut wavelengths: Option<[String; 2]> = None;
    for (ch, pair) in data.chunks(2).enumerate() {
        let prefix = format!("ch{:02}_", ch + 1);
        let suffix = |c: &str| -> Result<String, SignalError> {
            c.strip_prefix(&prefix)
                .map(str::to_owned)
                .ok_or_else(|| csv_err(line, format!("expected column starting with {prefix}, found {c:?}")))
        };
        let (a, b) = (suffix(pair[0])?, suffix(pair[1])?);
        let found = [a, b];
        match &wavelengths {
            None => wavelengths = Some(found),
            Some(w) if *w == found => {}
            Some(w) => {
                return Err(csv_err(line, format!("channel {} columns {found:?} do not match {w:?}", ch + 1)));
            }
        }
    }
    if channels != CHANNEL_COUNT {
        return Err(csv_err(line, format!("expected {CHANNEL_COUNT} channels, found {channels}")));
    }
    let w = wavelengths.expect("at least one channel");
    if w[0] == "hbo" && w[1] == "hbr" {
        return Ok((Schema::Hemo, channels));
    }
    let nm = |s: &str| -> Result<T, SignalError> {
        s.strip_suffix("nm")
            .and_then(|v| v.parse::<T>().ok())
            .ok_or_else(|| csv_err(line, format!("unrecognised column suffix {s:?}; expected hbo/hbr or <wavelength>nm")))
    };
    Ok((Schema::Raw([nm(&w[0])?, nm(&w[1])?]), channels))
}

pub fn parse_recording<T: Real>(text: &str) -> Result<Recording<T>, SignalError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (ln, first) = lines.next().ok_or_else(|| csv_err(1, "empty file"))?;
    let rate: T = first
        .trim()
        .strip_prefix('#')
        .map(str::trim)
        .and_then(|s| s.strip_prefix("rate_hz="))
        .and_then(|v| v.trim().parse().ok())
        .filter(|r: &T| *r > T::zero() && r.is_finite())
        .ok_or_else(|| csv_err(ln, "expected leading `# rate_hz=<float>` line"))?;
    let (ln, header) = lines.next().ok_or_else(|| csv_err(ln + 1, "missing header row"))?;
    let (schema, channels) = parse_header::<T>(header, ln)?;

    let mut times: Vec<T> = Vec::new();
    let mut cols: Vec<Vec<T>> = vec![Vec::new(); channels * 2];
    for (ln, row) in lines {
        if row.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = row.split(',').collect();
        if fields.len() != channels * 2 + 1 {
            return Err(csv_err(ln, format!("expected {} fields, found {}", channels * 2 + 1, fields.len())));
        }
        let mut values = fields.iter().map(|f| {
            f.trim().parse::<T>().ok().filter(|v| v.is_finite()).ok_or_else(|| csv_err(ln, format!("bad number {f:?}")))
        });
        let t = values.next().expect("time field")?;
        if let Some(prev) = times.last() {
            if t <= *prev {
                return Err(csv_err(ln, format!("timestamp {t} is not after {prev}")));
            }
        }
        let expected = times.first().copied().unwrap_or(t) + T::from_usize_lossy(times.len()) / rate;
        if (t - expected).abs() > T::lit(0.01) / rate {
            return Err(csv_err(ln, format!("timestamp {t} breaks uniform sampling (expected {expected})")));
        }
        times.push(t);
        for (col, v) in cols.iter_mut().zip(values) {
            col.push(v?);
        }
    }
    let start_time = times.first().copied().unwrap_or_else(T::zero);
    let mut it = cols.into_iter();
    let mut pairs = Vec::with_capacity(channels);
    while let (Some(a), Some(b)) = (it.next(), it.next()) {
        pairs.push((a, b));
    }
    Ok(match schema {
        Schema::Hemo => {
            let (hbo, hbr) = pairs.into_iter().unzip();
            Recording::Hemo(HemoTimeSeries { sample_rate: rate, start_time, hbo, hbr })
        }
        Schema::Raw(wavelengths) => Recording::Raw(RawIntensitySeries {
            sample_rate: rate,
            start_time,
            wavelengths,
            samples: pairs.into_iter().map(|(a, b)| [a, b]).collect(),
        }),
    })
}
