//! Golden fixtures shared with the operator console tests.
//!
//! `golden_session.jsonl` is a recorded session a mock server can replay;
//! `golden_messages.jsonl` holds one example of each wire message type.
//! Regenerate both with `NEUROSWARM_BLESS=1 cargo test --test golden`.

use std::path::{Path, PathBuf};

use neuroswarm_core::adapt::Action;
use neuroswarm_core::heatmap::AbstractionLevel;
use neuroswarm_session::config::{CalibrationMode, Phase, ScriptedCommand};
use neuroswarm_session::events::parse_log;
use neuroswarm_session::operator::OperatorModel;
use neuroswarm_session::protocol::{ErrorCode, WireMessage};
use neuroswarm_session::replay::replay;
use neuroswarm_session::session::heatmap_message;
use neuroswarm_session::{run_headless, Command, CommandOutcome, CommandStatus, SessionConfig};

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn golden_config() -> SessionConfig {
    let mut config = SessionConfig {
        duration: 60.0,
        seed: 99,
        phases: vec![Phase {
            name: "surge".into(),
            condition: "high".into(),
            start: 0.0,
            duration: 60.0,
            task_density: 1.0,
            activation: 1.0,
        }],
        operator: Some(OperatorModel { confirm_suggestions: false, ..OperatorModel::default() }),
        script: vec![ScriptedCommand { at: 5.0, command: Command::SetLevel { level: 4 } }],
        ..SessionConfig::default()
    };
    config.world.agent_count = 8;
    config.calibration.mode = CalibrationMode::Classifier;
    config
}

fn check(name: &str, actual: &str) {
    let path = fixtures().join(name);
    if std::env::var_os("NEUROSWARM_BLESS").is_some() {
        std::fs::create_dir_all(fixtures()).unwrap();
        std::fs::write(&path, actual).unwrap();
        return;
    }
    let expected = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert!(expected == actual, "{name} differs from the generated output; rerun with NEUROSWARM_BLESS=1 if intended");
}

#[test]
fn golden_session_log() {
    let result = run_headless(golden_config()).unwrap();
    let text = result.jsonl();
    let events = parse_log(&text).unwrap();
    let suggestions = events
        .iter()
        .filter(|e| matches!(&e.body, neuroswarm_session::EventBody::Adaptation(r) if r.decision.action == Action::Raise))
        .count();
    assert!(suggestions >= 1, "fixture should contain a raise suggestion");
    check("golden_session.jsonl", &text);
}

#[test]
fn golden_wire_messages() {
    let result = run_headless(golden_config()).unwrap();
    let mut picked: Vec<WireMessage> = Vec::new();
    let mut kinds = std::collections::BTreeSet::new();
    replay(&result.events, 1e9, |m| {
        let kind = serde_json::to_value(&m).unwrap()["type"].as_str().unwrap().to_owned();
        if kinds.insert(kind) {
            picked.push(m);
        }
        Ok(())
    })
    .unwrap();
    let sim = neuroswarm_core::swarm::SimState::init(golden_config().world).unwrap();
    for level in 1..=5 {
        picked.push(heatmap_message(&sim, AbstractionLevel::new(level).unwrap(), 0.0).unwrap());
    }
    picked.extend([
        WireMessage::Command { id: 1, command: Command::AssignAgent { agent_id: 0, task_id: 3 } },
        WireMessage::Command { id: 2, command: Command::AssignCluster { agent_ids: vec![0, 1], task_ids: vec![3, 4, 5] } },
        WireMessage::Command { id: 3, command: Command::SetLevel { level: 5 } },
        WireMessage::Command { id: 4, command: Command::ConfirmSuggestion { decision_id: 1 } },
        WireMessage::Command { id: 5, command: Command::DismissSuggestion { decision_id: 2 } },
        WireMessage::Command { id: 6, command: Command::Pause },
        WireMessage::Ack { id: 3, outcome: CommandOutcome::applied() },
        WireMessage::Ack {
            id: 2,
            outcome: CommandOutcome {
                status: CommandStatus::Partial,
                rejected_ids: vec![4],
                message: Some("tasks already done: [4]".into()),
            },
        },
        WireMessage::Error { id: Some(1), code: ErrorCode::Rejected, message: "task 3 is already done".into() },
        WireMessage::Error { id: None, code: ErrorCode::Schema, message: "missing field `level`".into() },
    ]);
    let text: String = picked.iter().map(|m| serde_json::to_string(m).unwrap() + "\n").collect();
    for line in text.lines() {
        let back: WireMessage = serde_json::from_str(line).unwrap();
        assert_eq!(serde_json::to_string(&back).unwrap(), line);
    }
    check("golden_messages.jsonl", &text);
}
