//! Session runner for the neuroadaptive swarm testbed: the closed loop,
//! event logging, replay, offline analysis and the client wire protocol.

pub mod analyze;
pub mod bench;
pub mod command;
pub mod config;
pub mod events;
pub mod operator;
pub mod plot;
pub mod protocol;
pub mod replay;
pub mod server;
pub mod session;
pub mod source;

use neuroswarm_core::{GlmError, SignalError};

pub use command::{Command, CommandOutcome, CommandSource, CommandStatus};
pub use config::SessionConfig;
pub use events::{EventBody, EventLog, SessionEvent};
pub use protocol::WireMessage;
pub use session::{run_headless, Session, SessionResult};

#[derive(Debug, thiserror::Error)]
pub enum SessionError {
    #[error("config: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(String),
    #[error("log line {line}: {message} (last valid event: {last_valid})")]
    Log { line: usize, last_valid: usize, message: String },
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error(transparent)]
    Glm(#[from] GlmError),
    #[error("replay: {0}")]
    Replay(String),
    #[error("analysis: {0}")]
    Analyze(String),
    #[error("session already finished")]
    Finished,
}
