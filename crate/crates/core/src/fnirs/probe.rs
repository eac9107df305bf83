//! Prefrontal probe geometry and its key-value layout file.
//!
//! ```text
//! source.1 = 0.0, 0.0
//! detector.1 = 0.0, 3.0
//! channel.1 = 1, 1, left-DLPFC
//! ```
//!
//! Indices in the file are 1-based; `#` starts a comment.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::SignalError;
use crate::scalar::{Point, Real};

pub const SOURCE_COUNT: usize = 11;
pub const DETECTOR_COUNT: usize = 7;
pub const CHANNEL_COUNT: usize = 23;

const DEFAULT_LAYOUT: &str = include_str!("../../data/default_probe.layout");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Region {
    #[serde(rename = "left-DLPFC")]
    LeftDlpfc,
    #[serde(rename = "other-prefrontal")]
    OtherPrefrontal,
}

impl Region {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::LeftDlpfc => "left-DLPFC",
            Self::OtherPrefrontal => "other-prefrontal",
        }
    }
}

impl FromStr for Region {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "left-DLPFC" => Ok(Self::LeftDlpfc),
            "other-prefrontal" => Ok(Self::OtherPrefrontal),
            other => Err(format!("unknown region tag {other:?}")),
        }
    }
}

/// Source/detector pair, 0-based indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Channel {
    pub source: usize,
    pub detector: usize,
    pub region: Region,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ProbeLayout<T> {
    pub sources: Vec<Point<T>>,
    pub detectors: Vec<Point<T>>,
    pub channels: Vec<Channel>,
}

impl<T: Real> Default for ProbeLayout<T> {
    fn default() -> Self {
        Self::parse(DEFAULT_LAYOUT).expect("bundled layout is valid")
    }
}

fn layout_err(line: usize, message: impl Into<String>) -> SignalError {
    SignalError::Layout { line, message: message.into() }
}

fn parse_index(s: &str, line: usize, what: &str) -> Result<usize, SignalError> {
    let i: usize = s.trim().parse().map_err(|_| layout_err(line, format!("bad {what} index {s:?}")))?;
    if i == 0 {
        return Err(layout_err(line, format!("{what} indices are 1-based")));
    }
    Ok(i - 1)
}

fn slot<V: Clone>(v: &mut Vec<Option<V>>, idx: usize, value: V, line: usize, what: &str) -> Result<(), SignalError> {
    if v.len() <= idx {
        v.resize(idx + 1, None);
    }
    if v[idx].is_some() {
        return Err(layout_err(line, format!("duplicate {what}.{}", idx + 1)));
    }
    v[idx] = Some(value);
    Ok(())
}

fn collect<V>(v: Vec<Option<V>>, what: &str) -> Result<Vec<V>, SignalError> {
    v.into_iter()
        .enumerate()
        .map(|(i, x)| x.ok_or_else(|| layout_err(0, format!("missing {what}.{}", i + 1))))
        .collect()
}

impl<T: Real> ProbeLayout<T> {
    pub fn parse(text: &str) -> Result<Self, SignalError> {
        let mut sources: Vec<Option<Point<T>>> = Vec::new();
        let mut detectors: Vec<Option<Point<T>>> = Vec::new();
        let mut channels: Vec<Option<Channel>> = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = n + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| layout_err(line, "expected `key = value`"))?;
            let (kind, idx) = key
                .trim()
                .split_once('.')
                .ok_or_else(|| layout_err(line, format!("expected `kind.index`, got {:?}", key.trim())))?;
            let fields: Vec<&str> = value.split(',').map(str::trim).collect();
            match kind {
                "source" | "detector" => {
                    let idx = parse_index(idx, line, kind)?;
                    if fields.len() != 2 {
                        return Err(layout_err(line, "positions need `x, y`"));
                    }
                    let coord = |s: &str| s.parse::<T>().map_err(|_| layout_err(line, format!("bad coordinate {s:?}")));
                    let p = Point::new(coord(fields[0])?, coord(fields[1])?);
                    let target = if kind == "source" { &mut sources } else { &mut detectors };
                    slot(target, idx, p, line, kind)?;
                }
                "channel" => {
                    let idx = parse_index(idx, line, "channel")?;
                    if fields.len() != 3 {
                        return Err(layout_err(line, "channels need `source, detector, region`"));
                    }
                    let ch = Channel {
                        source: parse_index(fields[0], line, "source")?,
                        detector: parse_index(fields[1], line, "detector")?,
                        region: fields[2].parse().map_err(|e: String| layout_err(line, e))?,
                    };
                    slot(&mut channels, idx, ch, line, "channel")?;
                }
                other => return Err(layout_err(line, format!("unknown key kind {other:?}"))),
            }
        }
        let layout = Self {
            sources: collect(sources, "source")?,
            detectors: collect(detectors, "detector")?,
            channels: collect(channels, "channel")?,
        };
        layout.validate()?;
        Ok(layout)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, SignalError> {
        let text = std::fs::read_to_string(path.as_ref())?;
        Self::parse(&text)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (i, p) in self.sources.iter().enumerate() {
            let _ = writeln!(out, "source.{} = {}, {}", i + 1, p.x, p.y);
        }
        for (i, p) in self.detectors.iter().enumerate() {
            let _ = writeln!(out, "detector.{} = {}, {}", i + 1, p.x, p.y);
        }
        for (i, c) in self.channels.iter().enumerate() {
            let _ = writeln!(out, "channel.{} = {}, {}, {}", i + 1, c.source + 1, c.detector + 1, c.region.as_str());
        }
        out
    }

    pub fn validate(&self) -> Result<(), SignalError> {
        let check = |what: &str, got: usize, want: usize| {
            if got == want {
                Ok(())
            } else {
                Err(layout_err(0, format!("expected {want} {what}, found {got}")))
            }
        };
        check("sources", self.sources.len(), SOURCE_COUNT)?;
        check("detectors", self.detectors.len(), DETECTOR_COUNT)?;
        check("channels", self.channels.len(), CHANNEL_COUNT)?;
        for (i, c) in self.channels.iter().enumerate() {
            if c.source >= SOURCE_COUNT || c.detector >= DETECTOR_COUNT {
                return Err(layout_err(0, format!("channel {} references a missing optode", i + 1)));
            }
        }
        let left = self.left_dlpfc_channels().len();
        if left < 2 {
            return Err(layout_err(0, format!("need at least 2 left-DLPFC channels, found {left}")));
        }
        Ok(())
    }

    /// 0-based indices of channels tagged left-DLPFC.
    pub fn left_dlpfc_channels(&self) -> Vec<usize> {
        self.channels
            .iter()
            .enumerate()
            .filter(|(_, c)| c.region == Region::LeftDlpfc)
            .map(|(i, _)| i)
            .collect()
    }

    /// Midpoint between the channel's source and detector.
    pub fn channel_position(&self, channel: usize) -> Point<T> {
        let c = &self.channels[channel];
        let s = self.sources[c.source];
        let d = self.detectors[c.detector];
        let half = T::lit(0.5);
        Point::new((s.x + d.x) * half, (s.y + d.y) * half)
    }

    /// Source-detector separation of a channel, in layout units.
    pub fn separation(&self, channel: usize) -> T {
        let c = &self.channels[channel];
        self.sources[c.source].distance(&self.detectors[c.detector])
    }
}
