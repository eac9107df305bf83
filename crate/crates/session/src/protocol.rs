//! Wire protocol: length-prefixed JSON messages.
//!
//! Each frame is a 4-byte big-endian payload length followed by one UTF-8
//! JSON object. Clients receive a `state_snapshot` and a `heatmap` on
//! connect and `state_delta` messages afterwards; they send `command`
//! messages and get an `ack` or `error` back carrying the same `id`.

use std::io::{self, Read, Write};

use neuroswarm_core::adapt::AdaptationDecision;
use neuroswarm_core::glm::workload::WorkloadIndex;
use neuroswarm_core::heatmap::HeatmapView;
use neuroswarm_core::swarm::{Agent, Metrics, Task};
use serde::{Deserialize, Serialize};

use crate::command::{Command, CommandOutcome};
use crate::config::Scenario;

/// Frames above this size are rejected.
pub const MAX_FRAME: usize = 16 * 1024 * 1024;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub scenario: Scenario,
    pub level: u8,
    pub paused: bool,
    pub sim_clock: f64,
    pub agents: Vec<Agent<f64>>,
    /// Open tasks only.
    pub tasks: Vec<Task<f64>>,
    pub metrics: Metrics<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Delta {
    pub level: u8,
    pub paused: bool,
    pub sim_clock: f64,
    /// Agents whose position, status or queue changed since the last delta.
    pub agents: Vec<Agent<f64>>,
    pub new_tasks: Vec<Task<f64>>,
    pub completed_tasks: Vec<u32>,
    pub metrics: Metrics<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum WireMessage {
    StateSnapshot { t: String, state: Snapshot },
    StateDelta { t: String, delta: Delta },
    Heatmap { t: String, view: HeatmapView<f64> },
    Workload { t: String, index: WorkloadIndex<f64> },
    AdaptationSuggestion { t: String, decision_id: u64, automatic: bool, decision: AdaptationDecision<f64> },
    Command { id: u64, command: Command },
    Ack { id: u64, outcome: CommandOutcome },
    Error { id: Option<u64>, code: ErrorCode, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    /// Frame was not a valid message.
    Schema,
    /// Valid command that could not be applied.
    Rejected,
    /// Message type a client may not send.
    Unexpected,
}

pub fn encode(msg: &WireMessage) -> Vec<u8> {
    let body = serde_json::to_vec(msg).expect("messages serialise");
    let mut out = Vec::with_capacity(body.len() + 4);
    out.extend_from_slice(&(body.len() as u32).to_be_bytes());
    out.extend_from_slice(&body);
    out
}

pub fn write_frame(w: &mut impl Write, msg: &WireMessage) -> io::Result<()> {
    w.write_all(&encode(msg))?;
    w.flush()
}

#[derive(Debug)]
pub enum FrameError {
    /// Stream closed cleanly between frames.
    Closed,
    Io(io::Error),
    TooLarge(usize),
    /// The frame arrived but did not parse; the stream is still in sync.
    Schema(String),
}

/// Reads one raw frame body.
pub fn read_frame_bytes(r: &mut impl Read) -> Result<Vec<u8>, FrameError> {
    let mut len = [0u8; 4];
    match r.read_exact(&mut len) {
        Ok(()) => {}
        Err(e) if e.kind() == io::ErrorKind::UnexpectedEof => return Err(FrameError::Closed),
        Err(e) => return Err(FrameError::Io(e)),
    }
    let n = u32::from_be_bytes(len) as usize;
    if n > MAX_FRAME {
        return Err(FrameError::TooLarge(n));
    }
    let mut body = vec![0u8; n];
    r.read_exact(&mut body).map_err(FrameError::Io)?;
    Ok(body)
}

pub fn read_frame(r: &mut impl Read) -> Result<WireMessage, FrameError> {
    let body = read_frame_bytes(r)?;
    serde_json::from_slice(&body).map_err(|e| FrameError::Schema(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frames_round_trip() {
        let msgs = vec![
            WireMessage::Command { id: 4, command: Command::SetLevel { level: 5 } },
            WireMessage::Ack { id: 4, outcome: CommandOutcome::applied() },
            WireMessage::Error { id: None, code: ErrorCode::Schema, message: "bad".into() },
        ];
        let mut buf = Vec::new();
        for m in &msgs {
            write_frame(&mut buf, m).unwrap();
        }
        let mut r = buf.as_slice();
        for m in &msgs {
            assert_eq!(&read_frame(&mut r).unwrap(), m);
        }
        assert!(matches!(read_frame(&mut r), Err(FrameError::Closed)));
    }

    #[test]
    fn command_frame_layout() {
        let bytes = encode(&WireMessage::Command { id: 1, command: Command::Pause });
        let body = br#"{"type":"command","id":1,"command":{"cmd":"pause"}}"#;
        assert_eq!(&bytes[..4], &(body.len() as u32).to_be_bytes());
        assert_eq!(&bytes[4..], body);
    }

    #[test]
    fn oversized_and_malformed_frames() {
        let mut r: &[u8] = &[0xff, 0xff, 0xff, 0xff];
        assert!(matches!(read_frame(&mut r), Err(FrameError::TooLarge(_))));
        let mut buf = 5u32.to_be_bytes().to_vec();
        buf.extend_from_slice(b"{oops");
        assert!(matches!(read_frame(&mut buf.as_slice()), Err(FrameError::Schema(_))));
    }
}
