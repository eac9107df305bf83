//! Wall-clock session loop serving the wire protocol over TCP.
//!
//! The loop owns the session. One reader thread per client decodes frames
//! and forwards them over a channel; the loop applies them between steps,
//! answers each command with an `ack` or `error`, and writes broadcasts to
//! every client.

use std::collections::BTreeMap;
use std::io::ErrorKind;
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::{self, Receiver, Sender};
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use crate::command::{CommandSource, CommandStatus};
use crate::protocol::{read_frame, write_frame, ErrorCode, FrameError, WireMessage};
use crate::session::{Inbox, Session, SessionResult};
use crate::SessionError;

type ClientId = u64;

enum Inbound {
    Message(ClientId, WireMessage),
    Bad(ClientId, String),
    /// Stream unusable; drop the client after answering if possible.
    Gone(ClientId, Option<String>),
}

pub struct Server {
    listener: TcpListener,
    stop: Arc<AtomicBool>,
}

impl Server {
    pub fn bind(address: &str) -> Result<Self, SessionError> {
        let listener = TcpListener::bind(address).map_err(|e| SessionError::Io(format!("bind {address}: {e}")))?;
        listener.set_nonblocking(true).map_err(|e| SessionError::Io(e.to_string()))?;
        Ok(Self { listener, stop: Arc::new(AtomicBool::new(false)) })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.listener.local_addr().expect("bound listener has an address")
    }

    /// Setting the flag ends the session after the current step.
    pub fn stop_flag(&self) -> Arc<AtomicBool> {
        self.stop.clone()
    }

    /// Runs `session` at wall-clock rate until it finishes or is stopped.
    pub fn run(self, mut session: Session) -> Result<SessionResult, SessionError> {
        session.enable_broadcast();
        let (tx, rx) = mpsc::channel();
        let mut clients: BTreeMap<ClientId, TcpStream> = BTreeMap::new();
        let mut next_client: ClientId = 0;
        let dt = Duration::from_secs_f64(session.config().world.tick_dt);
        let started = Instant::now();
        let mut steps: u32 = 0;

        while !session.is_finished() && !self.stop.load(Ordering::SeqCst) {
            self.accept(&session, &mut clients, &mut next_client, &tx)?;
            let (inbox, origin) = drain(&rx, &mut clients);
            let replies = session.step(inbox)?;
            for ((msg_id, outcome), client) in replies.into_iter().zip(origin) {
                let id = msg_id.unwrap_or(0);
                let reply = if outcome.status == CommandStatus::Rejected {
                    WireMessage::Error {
                        id: Some(id),
                        code: ErrorCode::Rejected,
                        message: outcome.message.unwrap_or_else(|| "rejected".into()),
                    }
                } else {
                    WireMessage::Ack { id, outcome }
                };
                send(&mut clients, client, &reply);
            }
            for msg in session.take_outbox() {
                broadcast(&mut clients, &msg);
            }
            steps += 1;
            if let Some(wait) = (dt * steps).checked_sub(started.elapsed()) {
                thread::sleep(wait);
            }
        }
        for (_, c) in clients {
            let _ = c.shutdown(std::net::Shutdown::Both);
        }
        session.finish()
    }

    fn accept(
        &self,
        session: &Session,
        clients: &mut BTreeMap<ClientId, TcpStream>,
        next: &mut ClientId,
        tx: &Sender<Inbound>,
    ) -> Result<(), SessionError> {
        loop {
            let stream = match self.listener.accept() {
                Ok((s, _)) => s,
                Err(e) if e.kind() == ErrorKind::WouldBlock => return Ok(()),
                Err(e) => return Err(SessionError::Io(e.to_string())),
            };
            let id = *next;
            *next += 1;
            let _ = stream.set_nonblocking(false);
            let _ = stream.set_nodelay(true);
            let _ = stream.set_write_timeout(Some(Duration::from_secs(1)));
            let Ok(reader) = stream.try_clone() else { continue };
            clients.insert(id, stream);
            send(clients, id, &session.snapshot());
            send(clients, id, &session.heatmap()?);
            let tx = tx.clone();
            thread::spawn(move || read_client(id, reader, tx));
        }
    }
}

fn read_client(id: ClientId, mut stream: TcpStream, tx: Sender<Inbound>) {
    loop {
        let msg = match read_frame(&mut stream) {
            Ok(m) => Inbound::Message(id, m),
            Err(FrameError::Schema(e)) => Inbound::Bad(id, e),
            Err(FrameError::TooLarge(n)) => {
                let _ = tx.send(Inbound::Gone(id, Some(format!("frame of {n} bytes exceeds the limit"))));
                return;
            }
            Err(FrameError::Closed | FrameError::Io(_)) => {
                let _ = tx.send(Inbound::Gone(id, None));
                return;
            }
        };
        if tx.send(msg).is_err() {
            return;
        }
    }
}

/// Collects commands for the next step; answers anything else directly.
fn drain(rx: &Receiver<Inbound>, clients: &mut BTreeMap<ClientId, TcpStream>) -> (Inbox, Vec<ClientId>) {
    let mut inbox = Inbox::new();
    let mut origin = Vec::new();
    while let Ok(msg) = rx.try_recv() {
        match msg {
            Inbound::Message(c, WireMessage::Command { id, command }) => {
                inbox.push((CommandSource::Client, command, Some(id)));
                origin.push(c);
            }
            Inbound::Message(c, other) => {
                let kind = serde_json::to_value(&other)
                    .ok()
                    .and_then(|v| v.get("type").and_then(|t| t.as_str()).map(str::to_owned))
                    .unwrap_or_default();
                let reply = WireMessage::Error {
                    id: None,
                    code: ErrorCode::Unexpected,
                    message: format!("clients may only send commands, got {kind}"),
                };
                send(clients, c, &reply);
            }
            Inbound::Bad(c, e) => {
                send(clients, c, &WireMessage::Error { id: None, code: ErrorCode::Schema, message: e });
            }
            Inbound::Gone(c, reason) => {
                if let Some(message) = reason {
                    send(clients, c, &WireMessage::Error { id: None, code: ErrorCode::Schema, message });
                }
                clients.remove(&c);
            }
        }
    }
    (inbox, origin)
}

fn send(clients: &mut BTreeMap<ClientId, TcpStream>, id: ClientId, msg: &WireMessage) {
    if let Some(stream) = clients.get_mut(&id) {
        if write_frame(stream, msg).is_err() {
            clients.remove(&id);
        }
    }
}

fn broadcast(clients: &mut BTreeMap<ClientId, TcpStream>, msg: &WireMessage) {
    let dead: Vec<ClientId> =
        clients.iter_mut().filter_map(|(id, s)| write_frame(s, msg).is_err().then_some(*id)).collect();
    for id in dead {
        clients.remove(&id);
    }
}
