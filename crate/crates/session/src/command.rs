//! Operator commands and their outcomes.

use serde::{Deserialize, Serialize};

/// Everything that can change the session from outside the loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "cmd", rename_all = "snake_case", deny_unknown_fields)]
pub enum Command {
    AssignAgent { agent_id: u32, task_id: u32 },
    AssignCluster { agent_ids: Vec<u32>, task_ids: Vec<u32> },
    SetLevel { level: u8 },
    Pause,
    Resume,
    ConfirmSuggestion { decision_id: u64 },
    DismissSuggestion { decision_id: u64 },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Self::AssignAgent { .. } => "assign_agent",
            Self::AssignCluster { .. } => "assign_cluster",
            Self::SetLevel { .. } => "set_level",
            Self::Pause => "pause",
            Self::Resume => "resume",
            Self::ConfirmSuggestion { .. } => "confirm_suggestion",
            Self::DismissSuggestion { .. } => "dismiss_suggestion",
        }
    }
}

/// Who issued a command.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommandSource {
    /// A connected client.
    Client,
    /// The configured script.
    Script,
    /// The simulated operator.
    Operator,
    /// The session itself (signal loss, recovery).
    Session,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommandStatus {
    Applied,
    /// Applied for some ids; the rest are listed in `rejected_ids`.
    Partial,
    Rejected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommandOutcome {
    pub status: CommandStatus,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rejected_ids: Vec<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

impl CommandOutcome {
    pub fn applied() -> Self {
        Self { status: CommandStatus::Applied, rejected_ids: Vec::new(), message: None }
    }

    pub fn rejected(message: impl Into<String>) -> Self {
        Self { status: CommandStatus::Rejected, rejected_ids: Vec::new(), message: Some(message.into()) }
    }

    pub fn is_applied(&self) -> bool {
        self.status != CommandStatus::Rejected
    }
}
