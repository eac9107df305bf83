//! JSONL session event log.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use neuroswarm_core::adapt::AdaptationDecision;
use neuroswarm_core::glm::workload::WorkloadIndex;
use neuroswarm_core::swarm::Metrics;
use serde::{Deserialize, Serialize};

use crate::command::{Command, CommandOutcome, CommandSource};
use crate::config::SessionConfig;
use crate::SessionError;

/// Session time as a fixed six-decimal string.
pub fn timestamp(t: f64) -> String {
    format!("{t:.6}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionEvent {
    pub seq: u64,
    /// Session seconds, see [`timestamp`].
    pub t: String,
    /// Session step the event belongs to.
    pub tick: u64,
    #[serde(flatten)]
    pub body: EventBody,
}

impl SessionEvent {
    pub fn time(&self) -> f64 {
        self.t.parse().unwrap_or(f64::NAN)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "kebab-case")]
pub enum EventBody {
    Command(CommandRecord),
    TickSummary(TickSummary),
    WorkloadSample(WorkloadIndex<f64>),
    Adaptation(AdaptationRecord),
    Metric(MetricRecord),
}

/// Command-kind payloads. Besides operator commands these carry the session
/// header and phase boundaries, which replay and analysis depend on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum CommandRecord {
    Start { config: Box<SessionConfig> },
    BeginPhase { name: String, condition: String, task_density: f64 },
    EndPhase { name: String, condition: String },
    Issued { id: u64, source: CommandSource, command: Command, outcome: CommandOutcome },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TickSummary {
    pub sim_clock: f64,
    pub level: u8,
    pub paused: bool,
    pub open_tasks: usize,
    pub busy_agents: usize,
    pub tasks_spawned: u64,
    pub tasks_completed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdaptationOutcome {
    Applied,
    Suggested,
    Confirmed,
    Dismissed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptationRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decision_id: Option<u64>,
    pub outcome: AdaptationOutcome,
    pub decision: AdaptationDecision<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricScope {
    Phase,
    Final,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord {
    pub scope: MetricScope,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase: Option<String>,
    pub metrics: Metrics<f64>,
    pub completion_efficiency: f64,
}

/// Append-only log. Keeps every event in memory and optionally mirrors
/// each line to a file as it is written.
#[derive(Debug, Default)]
pub struct EventLog {
    events: Vec<SessionEvent>,
    file: Option<BufWriter<File>>,
}

impl EventLog {
    pub fn in_memory() -> Self {
        Self::default()
    }

    pub fn to_file(path: impl AsRef<Path>) -> Result<Self, SessionError> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| SessionError::Io(format!("{}: {e}", path.display())))?;
        Ok(Self { events: Vec::new(), file: Some(BufWriter::new(file)) })
    }

    pub fn push(&mut self, t: f64, tick: u64, body: EventBody) -> Result<&SessionEvent, SessionError> {
        let event = SessionEvent { seq: self.events.len() as u64, t: timestamp(t), tick, body };
        if let Some(f) = self.file.as_mut() {
            let line = serde_json::to_string(&event).expect("events serialise");
            writeln!(f, "{line}").map_err(|e| SessionError::Io(e.to_string()))?;
        }
        self.events.push(event);
        Ok(self.events.last().expect("just pushed"))
    }

    pub fn events(&self) -> &[SessionEvent] {
        &self.events
    }

    pub fn into_events(self) -> Vec<SessionEvent> {
        self.events
    }

    pub fn flush(&mut self) -> Result<(), SessionError> {
        if let Some(f) = self.file.as_mut() {
            f.flush().map_err(|e| SessionError::Io(e.to_string()))?;
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        to_jsonl(&self.events)
    }
}

pub fn to_jsonl(events: &[SessionEvent]) -> String {
    let mut out = String::new();
    for e in events {
        out.push_str(&serde_json::to_string(e).expect("events serialise"));
        out.push('\n');
    }
    out
}

/// Parses a log, checking sequence numbers and time order.
pub fn parse_log(text: &str) -> Result<Vec<SessionEvent>, SessionError> {
    let mut events: Vec<SessionEvent> = Vec::new();
    let last_valid = |events: &Vec<SessionEvent>| events.len();
    for (i, line) in text.split_inclusive('\n').enumerate() {
        let ln = i + 1;
        let err = |message: String| SessionError::Log { line: ln, last_valid: last_valid(&events), message };
        if !line.ends_with('\n') {
            return Err(err("truncated line (no terminating newline)".into()));
        }
        let body = line.trim_end_matches('\n');
        let event: SessionEvent = serde_json::from_str(body).map_err(|e| err(e.to_string()))?;
        if event.seq != events.len() as u64 {
            return Err(err(format!("sequence number {} out of order, expected {}", event.seq, events.len())));
        }
        let t = event.time();
        if !t.is_finite() {
            return Err(err(format!("bad timestamp {:?}", event.t)));
        }
        if let Some(prev) = events.last() {
            if t < prev.time() || event.tick < prev.tick {
                return Err(err(format!("timestamp {} precedes {}", event.t, prev.t)));
            }
        }
        events.push(event);
    }
    Ok(events)
}

pub fn read_log(path: impl AsRef<Path>) -> Result<Vec<SessionEvent>, SessionError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| SessionError::Io(format!("{}: {e}", path.display())))?;
    parse_log(&text)
}

/// The session header, which must be the first event.
pub fn header(events: &[SessionEvent]) -> Result<&SessionConfig, SessionError> {
    match events.first().map(|e| &e.body) {
        Some(EventBody::Command(CommandRecord::Start { config })) => Ok(config),
        _ => Err(SessionError::Log { line: 1, last_valid: 0, message: "first event is not the session start".into() }),
    }
}

pub fn final_metrics(events: &[SessionEvent]) -> Option<&Metrics<f64>> {
    events.iter().rev().find_map(|e| match &e.body {
        EventBody::Metric(m) if m.scope == MetricScope::Final => Some(&m.metrics),
        _ => None,
    })
}
