//! Offline GLM analysis of a recorded session.

use std::path::Path;

use neuroswarm_core::fnirs::probe::ProbeLayout;
use neuroswarm_core::fnirs::recording::{load_recording, Recording};
use neuroswarm_core::fnirs::{Chromophore, HemoTimeSeries};
use neuroswarm_core::glm::contrast::{contrast_t, stat_map, stats_csv, ChannelStat, ProbeMap};
use neuroswarm_core::glm::design::build_design;
use neuroswarm_core::glm::fit::fit_glm;
use neuroswarm_core::glm::{EventBlock, BASELINE_CONDITION};

use crate::events::{CommandRecord, EventBody, SessionEvent};
use crate::plot::probe_map_svg;
use crate::source::Feed;
use crate::SessionError;

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisOptions {
    /// `"A - B"` or `"A"` (against the resting baseline).
    pub contrast: String,
    pub alpha: f64,
    pub drift_order: usize,
    pub chromophore: Chromophore,
}

impl AnalysisOptions {
    pub fn new(contrast: impl Into<String>) -> Self {
        Self { contrast: contrast.into(), alpha: 0.05, drift_order: 3, chromophore: Chromophore::Hbo }
    }
}

#[derive(Debug, Clone)]
pub struct Analysis {
    pub stats: Vec<ChannelStat<f64>>,
    pub map: ProbeMap<f64>,
    /// Blocks actually used, clipped to the recording.
    pub blocks: Vec<EventBlock<f64>>,
}

/// Phase blocks from the begin/end events of a log. A phase left open runs
/// to the last event.
pub fn phase_blocks(events: &[SessionEvent]) -> Vec<EventBlock<f64>> {
    let last = events.last().map_or(0.0, |e| e.time());
    let mut open: Vec<(String, String, f64)> = Vec::new();
    let mut out = Vec::new();
    for e in events {
        match &e.body {
            EventBody::Command(CommandRecord::BeginPhase { name, condition, .. }) => {
                open.push((name.clone(), condition.clone(), e.time()));
            }
            EventBody::Command(CommandRecord::EndPhase { name, .. }) => {
                if let Some(i) = open.iter().position(|(n, _, _)| n == name) {
                    let (_, condition, start) = open.remove(i);
                    if e.time() > start {
                        out.push(EventBlock::new(start, e.time() - start, condition));
                    }
                }
            }
            _ => {}
        }
    }
    for (_, condition, start) in open {
        if last > start {
            out.push(EventBlock::new(start, last - start, condition));
        }
    }
    out.sort_by(|a, b| a.onset.total_cmp(&b.onset));
    out
}

/// Splits `"A - B"` into `("A", Some("B"))`.
pub fn parse_contrast(spec: &str) -> Result<(String, Option<String>), SessionError> {
    let (pos, neg) = match spec.split_once('-') {
        Some((a, b)) => (a.trim(), Some(b.trim())),
        None => (spec.trim(), None),
    };
    if pos.is_empty() || neg.is_some_and(str::is_empty) {
        return Err(SessionError::Analyze(format!("malformed contrast {spec:?}, expected \"A - B\" or \"A\"")));
    }
    Ok((pos.to_owned(), neg.map(str::to_owned)))
}

pub fn analyze(
    events: &[SessionEvent],
    series: &HemoTimeSeries<f64>,
    layout: &ProbeLayout<f64>,
    options: &AnalysisOptions,
) -> Result<Analysis, SessionError> {
    let all = phase_blocks(events);
    let (pos, neg) = parse_contrast(&options.contrast)?;
    let mut known: Vec<String> = all.iter().map(|b| b.condition.clone()).collect();
    known.push(BASELINE_CONDITION.to_owned());
    known.sort();
    known.dedup();
    for name in std::iter::once(&pos).chain(neg.as_ref()) {
        if !known.contains(name) {
            return Err(SessionError::Analyze(format!(
                "unknown condition {name:?}; available: {}",
                known.join(", ")
            )));
        }
    }

    let start = series.start_time;
    let end = start + series.duration();
    let blocks: Vec<EventBlock<f64>> = all
        .iter()
        .filter_map(|b| {
            let on = b.onset.max(start);
            let off = b.end().min(end);
            (off > on).then(|| EventBlock::new(on, off - on, b.condition.clone()))
        })
        .collect();
    let log_span = (all.first().map_or(0.0, |b| b.onset), all.iter().map(|b| b.end()).fold(0.0, f64::max));
    if blocks.is_empty() {
        return Err(SessionError::Analyze(format!(
            "no overlapping time range: log phases cover {:.3}..{:.3} s, recording covers {start:.3}..{end:.3} s",
            log_span.0, log_span.1
        )));
    }

    let design = build_design(&blocks, series.sample_rate, start, series.len(), options.drift_order)?;
    let c = design.contrast(&pos, neg.as_deref())?;
    let fit = fit_glm(series, &design, options.chromophore)?;
    let stats = contrast_t(&fit, &c, options.alpha)?;
    let map = stat_map(&stats, layout)?;
    Ok(Analysis { stats, map, blocks })
}

/// Loads a recording as hemoglobin changes, converting raw intensities.
pub fn load_hemo(path: &Path, layout: &ProbeLayout<f64>) -> Result<HemoTimeSeries<f64>, SessionError> {
    match load_recording::<f64>(path)? {
        Recording::Hemo(s) => Ok(s),
        Recording::Raw(_) => match Feed::from_file(path, layout)? {
            Feed::Series { series, .. } => Ok(series),
            Feed::Live(_) => unreachable!("file feeds are series"),
        },
    }
}

/// Writes `stats.csv`, `probe_map.csv` and `probe_map.svg` into `out`.
pub fn write_exports(analysis: &Analysis, out: &Path) -> Result<(), SessionError> {
    std::fs::create_dir_all(out).map_err(|e| SessionError::Io(format!("{}: {e}", out.display())))?;
    let write = |name: &str, body: String| {
        let p = out.join(name);
        std::fs::write(&p, body).map_err(|e| SessionError::Io(format!("{}: {e}", p.display())))
    };
    write("stats.csv", stats_csv(&analysis.stats))?;
    write("probe_map.csv", analysis.map.to_csv())?;
    write("probe_map.svg", probe_map_svg(&analysis.map))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::events::EventLog;

    fn log(phases: &[(&str, &str, f64, f64)]) -> Vec<SessionEvent> {
        let mut marks: Vec<(f64, EventBody)> = Vec::new();
        for (name, cond, on, off) in phases {
            marks.push((
                *on,
                EventBody::Command(CommandRecord::BeginPhase {
                    name: (*name).into(),
                    condition: (*cond).into(),
                    task_density: 0.0,
                }),
            ));
            marks.push((*off, EventBody::Command(CommandRecord::EndPhase { name: (*name).into(), condition: (*cond).into() })));
        }
        marks.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut l = EventLog::in_memory();
        for (t, body) in marks {
            l.push(t, (t * 10.0) as u64, body).unwrap();
        }
        l.into_events()
    }

    #[test]
    fn blocks_come_from_phase_events() {
        let events = log(&[("a", "high", 10.0, 30.0), ("b", "rest", 30.0, 50.0)]);
        let blocks = phase_blocks(&events);
        assert_eq!(blocks, vec![EventBlock::new(10.0, 20.0, "high"), EventBlock::new(30.0, 20.0, "rest")]);
    }

    #[test]
    fn contrast_parsing() {
        assert_eq!(parse_contrast("high - rest").unwrap(), ("high".into(), Some("rest".into())));
        assert_eq!(parse_contrast("high").unwrap(), ("high".into(), None));
        assert!(parse_contrast("high -").is_err());
    }

    #[test]
    fn unknown_condition_lists_available() {
        let events = log(&[("a", "high", 10.0, 30.0)]);
        let s = HemoTimeSeries::zeros(23, 600, 10.0);
        let err = analyze(&events, &s, &ProbeLayout::default(), &AnalysisOptions::new("scenario2 - rest")).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("scenario2") && msg.contains("high, rest"), "{msg}");
    }

    #[test]
    fn disjoint_ranges_are_rejected() {
        let events = log(&[("a", "high", 100.0, 130.0)]);
        let s = HemoTimeSeries::zeros(23, 600, 10.0);
        let err = analyze(&events, &s, &ProbeLayout::default(), &AnalysisOptions::new("high")).unwrap_err();
        assert!(err.to_string().contains("no overlapping"), "{err}");
    }
}
