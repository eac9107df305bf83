//! The closed loop: simulation, signal, workload estimator and adaptation.
//!
//! A session advances in fixed steps of `world.tick_dt` seconds of session
//! time. Each step:
//! 1. logs phase boundaries reached at the step start,
//! 2. applies scripted, client, operator-model and session commands,
//! 3. spawns tasks and ticks the world unless paused,
//! 4. feeds the signal samples of the step to the estimator and passes
//!    any workload index to the adaptation engine,
//! 5. logs a tick summary every `summary_interval` seconds.
//!
//! Pausing freezes the simulation clock only; session time, the signal and
//! the schedule keep running.

use std::collections::BTreeMap;

use neuroswarm_core::adapt::{AdaptationDecision, AdaptationEngine, EngineOutput, PolicyConfig};
use neuroswarm_core::fnirs::probe::ProbeLayout;
use neuroswarm_core::fnirs::recording::write_hemo;
use neuroswarm_core::fnirs::stream::Sample;
use neuroswarm_core::fnirs::synth::synth_generate;
use neuroswarm_core::fnirs::HemoTimeSeries;
use neuroswarm_core::glm::workload::{calibrate_classifier, WorkloadEstimator, WorkloadIndex, WorkloadModel};
use neuroswarm_core::heatmap::{build_heatmap, AbstractionLevel, HeatmapView};
use neuroswarm_core::swarm::{completion_efficiency, seeded_rng, Agent, AgentStatus, Metrics, SimState, SwarmError};
use rand_chacha::ChaCha8Rng;

use crate::command::{Command, CommandOutcome, CommandSource, CommandStatus};
use crate::config::{CalibrationMode, SessionConfig, SignalSource, HIGH_WORKLOAD};
use crate::events::{
    timestamp, AdaptationOutcome, AdaptationRecord, CommandRecord, EventBody, EventLog, MetricRecord, MetricScope,
    SessionEvent, TickSummary,
};
use crate::protocol::{Delta, Snapshot, WireMessage};
use crate::source::{Feed, LiveFeed};
use crate::SessionError;

/// Seed offset of the task spawn stream.
const SPAWN_STREAM: u64 = 0x5eed;

/// Minimum seconds between two state deltas.
pub const DELTA_INTERVAL: f64 = 0.1;

/// Commands waiting for the next step, as (source, command, client message id).
pub type Inbox = Vec<(CommandSource, Command, Option<u64>)>;

/// Result of a finished session.
#[derive(Debug)]
pub struct SessionResult {
    pub events: Vec<SessionEvent>,
    pub metrics: Metrics<f64>,
}

impl SessionResult {
    pub fn jsonl(&self) -> String {
        crate::events::to_jsonl(&self.events)
    }
}

struct PhaseProgress {
    begun: bool,
    ended: bool,
    start_metrics: Metrics<f64>,
}

/// Minimal world state shared by live sessions and replay.
pub struct World {
    pub sim: SimState<f64>,
    spawn_rng: ChaCha8Rng,
    pub paused: bool,
}

impl World {
    pub fn new(config: &SessionConfig) -> Result<Self, SessionError> {
        let sim = SimState::init(config.world.clone()).map_err(|e| SessionError::Config(e.to_string()))?;
        Ok(Self { sim, spawn_rng: seeded_rng(config.seed ^ SPAWN_STREAM), paused: false })
    }

    /// Spawns at `density` and ticks, unless paused. Returns completed task ids.
    pub fn advance(&mut self, density: f64) -> Vec<u32> {
        if self.paused {
            return Vec::new();
        }
        self.sim.spawn_tasks(density, &mut self.spawn_rng);
        self.sim.tick()
    }

    /// Applies the world-facing part of a command.
    pub fn apply(&mut self, command: &Command) -> CommandOutcome {
        match command {
            Command::AssignAgent { agent_id, task_id } => match self.sim.assign_agent(*agent_id, *task_id) {
                Ok(()) => CommandOutcome::applied(),
                Err(e) => swarm_rejection(e),
            },
            Command::AssignCluster { agent_ids, task_ids } => match self.sim.assign_cluster(agent_ids, task_ids) {
                Ok(outcome) if outcome.skipped_done.is_empty() => CommandOutcome::applied(),
                Ok(outcome) => CommandOutcome {
                    status: CommandStatus::Partial,
                    message: Some(format!("tasks already done: {:?}", outcome.skipped_done)),
                    rejected_ids: outcome.skipped_done,
                },
                Err(e) => swarm_rejection(e),
            },
            Command::Pause => {
                self.paused = true;
                CommandOutcome::applied()
            }
            Command::Resume => {
                self.paused = false;
                CommandOutcome::applied()
            }
            Command::SetLevel { .. } | Command::ConfirmSuggestion { .. } | Command::DismissSuggestion { .. } => {
                CommandOutcome::applied()
            }
        }
    }
}

/// Accumulates what changed between two state deltas.
pub struct DeltaTracker {
    last_agents: Vec<Agent<f64>>,
    last_task_count: usize,
    completed: Vec<u32>,
}

impl DeltaTracker {
    pub fn new(sim: &SimState<f64>) -> Self {
        Self { last_agents: sim.agents.clone(), last_task_count: sim.tasks.len(), completed: Vec::new() }
    }

    pub fn completed(&mut self, ids: impl IntoIterator<Item = u32>) {
        self.completed.extend(ids);
    }

    pub fn delta(&mut self, world: &World, level: AbstractionLevel) -> Delta {
        let sim = &world.sim;
        let agents = sim.agents.iter().zip(&self.last_agents).filter(|(a, b)| a != b).map(|(a, _)| a.clone()).collect();
        let new_tasks = sim.tasks[self.last_task_count..].to_vec();
        self.last_agents = sim.agents.clone();
        self.last_task_count = sim.tasks.len();
        Delta {
            level: level.get(),
            paused: world.paused,
            sim_clock: sim.clock,
            agents,
            new_tasks,
            completed_tasks: std::mem::take(&mut self.completed),
            metrics: sim.metrics.clone(),
        }
    }
}

fn swarm_rejection(e: SwarmError) -> CommandOutcome {
    let ids = match &e {
        SwarmError::UnknownAgent(id) | SwarmError::UnknownTask(id) | SwarmError::TaskDone(id) => vec![*id],
        SwarmError::AllTasksDone(ids) => ids.clone(),
        _ => Vec::new(),
    };
    CommandOutcome { status: CommandStatus::Rejected, rejected_ids: ids, message: Some(e.to_string()) }
}

pub struct Session {
    config: SessionConfig,
    world: World,
    level: AbstractionLevel,
    engine: Option<AdaptationEngine<f64>>,
    estimator: WorkloadEstimator<f64>,
    feed: Feed,
    log: EventLog,
    step: u64,
    total_steps: u64,
    summary_every: u64,
    delta_every: u64,
    next_command_id: u64,
    script: Vec<(f64, Command)>,
    script_cursor: usize,
    operator_next: f64,
    pending_confirms: Vec<(f64, u64)>,
    source_paused: bool,
    seen_drops: u64,
    phases: Vec<PhaseProgress>,
    recorded: Option<Vec<Sample<f64>>>,
    broadcast: bool,
    outbox: Vec<WireMessage>,
    deltas: DeltaTracker,
    finished: bool,
}

impl Session {
    /// Builds the session, calibrating the estimator if configured, and logs the header.
    pub fn new(config: SessionConfig) -> Result<Self, SessionError> {
        let log = match &config.record_path {
            Some(p) => EventLog::to_file(p)?,
            None => EventLog::in_memory(),
        };
        Self::with_log(config, log)
    }

    pub fn with_log(config: SessionConfig, log: EventLog) -> Result<Self, SessionError> {
        config.validate()?;
        let layout = ProbeLayout::default();
        let world = World::new(&config)?;

        let (feed, model) = match &config.signal_source {
            SignalSource::Synthetic(signal) => {
                let series = synth_generate(&config.synth_protocol(signal, &layout), &layout).map_err(SessionError::Signal)?;
                let model = match config.calibration.mode {
                    CalibrationMode::Classifier => Some(calibrate(&config, signal, &layout)?),
                    CalibrationMode::Baseline => None,
                };
                (Feed::from_series(series), model)
            }
            SignalSource::File { path } => (Feed::from_file(path, &layout)?, None),
            SignalSource::LiveSocket { address } => {
                (Feed::Live(LiveFeed::connect(address.clone(), layout.channels.len())), None)
            }
        };
        let rate = match &feed {
            Feed::Series { series, .. } => series.sample_rate,
            Feed::Live(_) => match &config.signal_source {
                SignalSource::Synthetic(s) => s.sample_rate,
                _ => 10.0,
            },
        };
        let estimator = WorkloadEstimator::new(config.workload.clone(), &layout, rate, model);

        let level = config.starting_level();
        let engine = if config.adaptation_enabled {
            Some(AdaptationEngine::new(config.policy.clone(), level).map_err(|e| SessionError::Config(e.to_string()))?)
        } else {
            None
        };
        let dt = config.world.tick_dt;
        let mut script: Vec<(f64, Command)> = config.script.iter().map(|s| (s.at, s.command.clone())).collect();
        script.sort_by(|a, b| a.0.total_cmp(&b.0));
        let phases = config
            .phases
            .iter()
            .map(|_| PhaseProgress { begun: false, ended: false, start_metrics: Metrics::default() })
            .collect();

        let mut session = Self {
            total_steps: (config.duration / dt).round() as u64,
            summary_every: ((config.summary_interval / dt).round() as u64).max(1),
            delta_every: ((DELTA_INTERVAL / dt).ceil() as u64).max(1),
            recorded: config.signal_record_path.as_ref().map(|_| Vec::new()),
            deltas: DeltaTracker::new(&world.sim),
            world,
            level,
            engine,
            estimator,
            feed,
            log,
            step: 0,
            next_command_id: 1,
            script,
            script_cursor: 0,
            operator_next: 0.0,
            pending_confirms: Vec::new(),
            source_paused: false,
            seen_drops: 0,
            phases,
            broadcast: false,
            outbox: Vec::new(),
            finished: false,
            config,
        };
        session.log.push(0.0, 0, EventBody::Command(CommandRecord::Start { config: Box::new(session.config.clone()) }))?;
        Ok(session)
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    pub fn sim(&self) -> &SimState<f64> {
        &self.world.sim
    }

    pub fn level(&self) -> AbstractionLevel {
        self.level
    }

    pub fn paused(&self) -> bool {
        self.world.paused
    }

    pub fn time(&self) -> f64 {
        self.step as f64 * self.config.world.tick_dt
    }

    pub fn is_finished(&self) -> bool {
        self.finished
    }

    pub fn events(&self) -> &[SessionEvent] {
        self.log.events()
    }

    pub fn workload_model(&self) -> Option<&WorkloadModel<f64>> {
        self.estimator.model()
    }

    pub fn policy(&self) -> Option<&PolicyConfig<f64>> {
        self.engine.as_ref().map(|e| e.config())
    }

    /// Turns on wire message generation for connected clients.
    pub fn enable_broadcast(&mut self) {
        self.broadcast = true;
    }

    pub fn take_outbox(&mut self) -> Vec<WireMessage> {
        std::mem::take(&mut self.outbox)
    }

    pub fn snapshot(&self) -> WireMessage {
        WireMessage::StateSnapshot { t: timestamp(self.time()), state: snapshot_of(&self.world, &self.config, self.level) }
    }

    pub fn heatmap(&self) -> Result<WireMessage, SessionError> {
        heatmap_message(&self.world.sim, self.level, self.time())
    }

    /// Runs every remaining step with no external input.
    pub fn run_to_end(mut self) -> Result<SessionResult, SessionError> {
        while !self.finished {
            self.step(Vec::new())?;
        }
        self.finish()
    }

    /// Advances one step. Returns the outcome of each inbox command in order.
    pub fn step(&mut self, inbox: Inbox) -> Result<Vec<(Option<u64>, CommandOutcome)>, SessionError> {
        if self.finished {
            return Err(SessionError::Finished);
        }
        let dt = self.config.world.tick_dt;
        let t = self.time();
        let t_end = (self.step + 1) as f64 * dt;
        let tick = self.step;

        self.phase_boundaries(t, tick)?;

        // commands
        while self.script_cursor < self.script.len() && self.script[self.script_cursor].0 <= t + 1e-9 {
            let cmd = self.script[self.script_cursor].1.clone();
            self.script_cursor += 1;
            self.issue(CommandSource::Script, cmd, t, tick)?;
        }
        let mut replies = Vec::with_capacity(inbox.len());
        for (source, cmd, msg_id) in inbox {
            let outcome = self.issue(source, cmd, t, tick)?;
            replies.push((msg_id, outcome));
        }
        if let Some(op) = self.config.operator.clone() {
            let due: Vec<u64> = self.pending_confirms.iter().filter(|(at, _)| *at <= t + 1e-9).map(|(_, id)| *id).collect();
            self.pending_confirms.retain(|(at, _)| *at > t + 1e-9);
            for id in due {
                if self.engine.as_ref().and_then(|e| e.pending()).is_some_and(|p| p.id == id) {
                    self.issue(CommandSource::Operator, Command::ConfirmSuggestion { decision_id: id }, t, tick)?;
                }
            }
            if t + 1e-9 >= self.operator_next {
                self.operator_next += op.interval;
                if !self.world.paused {
                    for cmd in op.decide(&self.world.sim, self.level) {
                        self.issue(CommandSource::Operator, cmd, t, tick)?;
                    }
                }
            }
        }
        let connected = self.feed.connected();
        let drops = self.feed.drops();
        let dropped = drops > self.seen_drops;
        self.seen_drops = drops;
        if (dropped || !connected) && !self.world.paused {
            self.source_paused = true;
            self.issue(CommandSource::Session, Command::Pause, t, tick)?;
        } else if connected && self.source_paused {
            self.source_paused = false;
            self.issue(CommandSource::Session, Command::Resume, t, tick)?;
        }

        // world
        let density = self.config.phase_at(t).map_or(0.0, |p| p.task_density);
        let completed = self.world.advance(density);
        if self.broadcast {
            self.deltas.completed(completed);
        }

        // signal → workload → adaptation
        for sample in self.feed.samples_before(t_end) {
            if let Some(rec) = self.recorded.as_mut() {
                rec.push(sample.clone());
            }
            if let Some(index) = self.estimator.push(sample) {
                self.on_index(index, t_end, tick)?;
            }
        }

        self.step += 1;
        if self.step % self.summary_every == 0 {
            let summary = self.summary();
            self.log.push(t_end, tick, EventBody::TickSummary(summary))?;
        }
        if self.broadcast && self.step % self.delta_every == 0 {
            let delta = self.deltas.delta(&self.world, self.level);
            self.outbox.push(WireMessage::StateDelta { t: timestamp(t_end), delta });
            if self.step % (self.delta_every * 10) == 0 {
                self.outbox.push(self.heatmap()?);
            }
        }
        if self.step >= self.total_steps {
            self.finished = true;
        }
        Ok(replies)
    }

    fn phase_boundaries(&mut self, t: f64, tick: u64) -> Result<(), SessionError> {
        for i in 0..self.config.phases.len() {
            let phase = &self.config.phases[i];
            let progress = &self.phases[i];
            if progress.begun && !progress.ended && t + 1e-9 >= phase.end() {
                self.end_phase(i, t, tick)?;
            }
        }
        for i in 0..self.config.phases.len() {
            let phase = &self.config.phases[i];
            if !self.phases[i].begun && t + 1e-9 >= phase.start {
                let body = EventBody::Command(CommandRecord::BeginPhase {
                    name: phase.name.clone(),
                    condition: phase.condition.clone(),
                    task_density: phase.task_density,
                });
                self.phases[i].begun = true;
                self.phases[i].start_metrics = self.world.sim.metrics.clone();
                self.log.push(t, tick, body)?;
            }
        }
        Ok(())
    }

    fn end_phase(&mut self, i: usize, t: f64, tick: u64) -> Result<(), SessionError> {
        let phase = &self.config.phases[i];
        self.phases[i].ended = true;
        let body = EventBody::Command(CommandRecord::EndPhase { name: phase.name.clone(), condition: phase.condition.clone() });
        self.log.push(t, tick, body)?;
        let now = &self.world.sim.metrics;
        let start = &self.phases[i].start_metrics;
        let metrics = Metrics {
            tasks_completed: now.tasks_completed - start.tasks_completed,
            tasks_spawned: now.tasks_spawned - start.tasks_spawned,
            total_agent_busy_time: now.total_agent_busy_time - start.total_agent_busy_time,
            elapsed: now.elapsed - start.elapsed,
        };
        let record = MetricRecord {
            scope: MetricScope::Phase,
            phase: Some(phase.name.clone()),
            completion_efficiency: completion_efficiency(&metrics),
            metrics,
        };
        self.log.push(t, tick, EventBody::Metric(record))?;
        Ok(())
    }

    /// Validates, applies and logs one command.
    pub fn issue(&mut self, source: CommandSource, command: Command, t: f64, tick: u64) -> Result<CommandOutcome, SessionError> {
        let id = self.next_command_id;
        self.next_command_id += 1;
        let mut adaptation: Option<AdaptationRecord> = None;
        let outcome = match &command {
            Command::SetLevel { level } => match AbstractionLevel::new(*level) {
                Ok(l) => {
                    self.level = l;
                    if let Some(e) = self.engine.as_mut() {
                        e.manual_set(l, t);
                    }
                    CommandOutcome::applied()
                }
                Err(e) => CommandOutcome::rejected(e.to_string()),
            },
            Command::ConfirmSuggestion { decision_id } => match self.engine.as_mut().map(|e| e.confirm(*decision_id, t)) {
                Some(Ok(decision)) => {
                    self.level = decision.to_level;
                    adaptation = Some(AdaptationRecord {
                        decision_id: Some(*decision_id),
                        outcome: AdaptationOutcome::Confirmed,
                        decision,
                    });
                    CommandOutcome::applied()
                }
                Some(Err(e)) => CommandOutcome::rejected(e.to_string()),
                None => CommandOutcome::rejected("adaptation is disabled"),
            },
            Command::DismissSuggestion { decision_id } => match self.engine.as_mut().map(|e| e.dismiss(*decision_id)) {
                Some(Ok(s)) => {
                    adaptation = Some(AdaptationRecord {
                        decision_id: Some(s.id),
                        outcome: AdaptationOutcome::Dismissed,
                        decision: s.decision,
                    });
                    CommandOutcome::applied()
                }
                Some(Err(e)) => CommandOutcome::rejected(e.to_string()),
                None => CommandOutcome::rejected("adaptation is disabled"),
            },
            other => self.world.apply(other),
        };
        self.log.push(
            t,
            tick,
            EventBody::Command(CommandRecord::Issued { id, source, command, outcome: outcome.clone() }),
        )?;
        if let Some(record) = adaptation {
            self.log.push(t, tick, EventBody::Adaptation(record))?;
        }
        if self.broadcast && outcome.is_applied() {
            self.outbox.push(self.heatmap()?);
        }
        Ok(outcome)
    }

    fn on_index(&mut self, index: WorkloadIndex<f64>, t: f64, tick: u64) -> Result<(), SessionError> {
        self.log.push(t, tick, EventBody::WorkloadSample(index.clone()))?;
        if self.broadcast {
            self.outbox.push(WireMessage::Workload { t: timestamp(t), index: index.clone() });
        }
        let Some(engine) = self.engine.as_mut() else { return Ok(()) };
        let Some(output) = engine.observe(index) else { return Ok(()) };
        let (record, decision_id, automatic): (AdaptationRecord, u64, bool) = match output {
            EngineOutput::Applied(decision) => {
                self.level = decision.to_level;
                (AdaptationRecord { decision_id: None, outcome: AdaptationOutcome::Applied, decision }, 0, true)
            }
            EngineOutput::Suggested(s) => {
                if let Some(op) = self.config.operator.as_ref().filter(|op| op.confirm_suggestions) {
                    self.pending_confirms.push((t + op.confirm_delay, s.id));
                }
                (
                    AdaptationRecord { decision_id: Some(s.id), outcome: AdaptationOutcome::Suggested, decision: s.decision },
                    s.id,
                    false,
                )
            }
        };
        if self.broadcast {
            self.outbox.push(WireMessage::AdaptationSuggestion {
                t: timestamp(t),
                decision_id,
                automatic,
                decision: record.decision.clone(),
            });
            if automatic {
                self.outbox.push(self.heatmap()?);
            }
        }
        self.log.push(t, tick, EventBody::Adaptation(record))?;
        Ok(())
    }

    fn summary(&self) -> TickSummary {
        let sim = &self.world.sim;
        TickSummary {
            sim_clock: sim.clock,
            level: self.level.get(),
            paused: self.world.paused,
            open_tasks: sim.open_tasks().count(),
            busy_agents: sim.agents.iter().filter(|a| a.status != AgentStatus::Idle).count(),
            tasks_spawned: sim.metrics.tasks_spawned,
            tasks_completed: sim.metrics.tasks_completed,
        }
    }

    /// Closes open phases, logs the final metrics and writes the signal record.
    pub fn finish(mut self) -> Result<SessionResult, SessionError> {
        let t = self.time();
        let tick = self.step;
        for i in 0..self.phases.len() {
            if self.phases[i].begun && !self.phases[i].ended {
                self.end_phase(i, t, tick)?;
            }
        }
        let metrics = self.world.sim.metrics.clone();
        let record = MetricRecord {
            scope: MetricScope::Final,
            phase: None,
            completion_efficiency: completion_efficiency(&metrics),
            metrics: metrics.clone(),
        };
        self.log.push(t, tick, EventBody::Metric(record))?;
        self.log.flush()?;
        if let (Some(path), Some(samples)) = (&self.config.signal_record_path, &self.recorded) {
            write_hemo(&samples_to_series(samples, self.estimator_rate()), path).map_err(SessionError::Signal)?;
        }
        Ok(SessionResult { events: self.log.into_events(), metrics })
    }

    fn estimator_rate(&self) -> f64 {
        match &self.feed {
            Feed::Series { series, .. } => series.sample_rate,
            Feed::Live(_) => 10.0,
        }
    }
}

fn calibrate(
    config: &SessionConfig,
    signal: &crate::config::SyntheticSignal,
    layout: &ProbeLayout<f64>,
) -> Result<WorkloadModel<f64>, SessionError> {
    let (protocol, labels) = config.calibration_protocol(signal, layout);
    let series = synth_generate(&protocol, layout).map_err(SessionError::Signal)?;
    calibrate_classifier(&series, &labels, &[HIGH_WORKLOAD.to_owned()], layout, &config.workload).map_err(SessionError::Glm)
}

/// Collects consecutive samples into a series.
pub fn samples_to_series(samples: &[Sample<f64>], rate: f64) -> HemoTimeSeries<f64> {
    let channels = samples.first().map_or(0, |s| s.hbo.len());
    HemoTimeSeries {
        sample_rate: rate,
        start_time: samples.first().map_or(0.0, |s| s.time),
        hbo: (0..channels).map(|c| samples.iter().map(|s| s.hbo[c]).collect()).collect(),
        hbr: (0..channels).map(|c| samples.iter().map(|s| s.hbr[c]).collect()).collect(),
    }
}

pub fn snapshot_of(world: &World, config: &SessionConfig, level: AbstractionLevel) -> Snapshot {
    let sim = &world.sim;
    Snapshot {
        scenario: config.scenario,
        level: level.get(),
        paused: world.paused,
        sim_clock: sim.clock,
        agents: sim.agents.clone(),
        tasks: sim.open_tasks().cloned().collect(),
        metrics: sim.metrics.clone(),
    }
}

pub fn heatmap_message(sim: &SimState<f64>, level: AbstractionLevel, t: f64) -> Result<WireMessage, SessionError> {
    let view: HeatmapView<f64> =
        build_heatmap(&sim.agents, &sim.tasks, level, &sim.config).map_err(|e| SessionError::Config(e.to_string()))?;
    Ok(WireMessage::Heatmap { t: timestamp(t), view })
}

/// Runs a session headless: steps as fast as possible, no wall clock.
pub fn run_headless(config: SessionConfig) -> Result<SessionResult, SessionError> {
    Session::new(config)?.run_to_end()
}

/// Non-hold decisions in a log, as (session time, decision).
pub fn decisions(events: &[SessionEvent]) -> Vec<(f64, AdaptationDecision<f64>)> {
    events
        .iter()
        .filter_map(|e| match &e.body {
            EventBody::Adaptation(r) if matches!(r.outcome, AdaptationOutcome::Applied | AdaptationOutcome::Suggested) => {
                Some((e.time(), r.decision.clone()))
            }
            _ => None,
        })
        .collect()
}

/// Commands in a log by step, for replay.
pub fn logged_commands(events: &[SessionEvent]) -> BTreeMap<u64, Vec<Command>> {
    let mut out: BTreeMap<u64, Vec<Command>> = BTreeMap::new();
    for e in events {
        if let EventBody::Command(CommandRecord::Issued { command, outcome, .. }) = &e.body {
            if outcome.is_applied() {
                out.entry(e.tick).or_default().push(command.clone());
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Phase;

    fn short_config() -> SessionConfig {
        SessionConfig {
            duration: 20.0,
            phases: vec![Phase {
                name: "busy".into(),
                condition: "busy".into(),
                start: 2.0,
                duration: 10.0,
                task_density: 2.0,
                activation: 0.0,
            }],
            ..SessionConfig::default()
        }
    }

    #[test]
    fn pause_freezes_the_sim_clock() {
        let mut s = Session::new(short_config()).unwrap();
        s.step(vec![(CommandSource::Client, Command::Pause, Some(1))]).unwrap();
        let clock = s.sim().clock;
        for _ in 0..20 {
            s.step(Vec::new()).unwrap();
        }
        assert_eq!(s.sim().clock, clock);
        assert!((s.time() - 2.1).abs() < 1e-9);
        s.step(vec![(CommandSource::Client, Command::Resume, Some(2))]).unwrap();
        assert!(s.sim().clock > clock);
    }

    #[test]
    fn stale_ids_are_rejected_by_name() {
        let mut s = Session::new(short_config()).unwrap();
        let replies = s
            .step(vec![(CommandSource::Client, Command::AssignAgent { agent_id: 0, task_id: 99 }, Some(7))])
            .unwrap();
        assert_eq!(replies[0].0, Some(7));
        assert_eq!(replies[0].1.status, CommandStatus::Rejected);
        assert_eq!(replies[0].1.rejected_ids, vec![99]);
        assert!(replies[0].1.message.as_deref().unwrap().contains("99"));
    }

    #[test]
    fn set_level_changes_heatmap_dimensions() {
        let mut s = Session::new(short_config()).unwrap();
        s.step(vec![(CommandSource::Client, Command::SetLevel { level: 5 }, None)]).unwrap();
        match s.heatmap().unwrap() {
            WireMessage::Heatmap { view: HeatmapView::Grid(g), .. } => assert_eq!((g.rows, g.cols), (4, 4)),
            other => panic!("unexpected {other:?}"),
        }
        let r = s.step(vec![(CommandSource::Client, Command::SetLevel { level: 9 }, None)]).unwrap();
        assert_eq!(r[0].1.status, CommandStatus::Rejected);
    }

    #[test]
    fn phases_and_metrics_are_logged() {
        let result = run_headless(short_config()).unwrap();
        let kinds: Vec<&str> = result
            .events
            .iter()
            .filter_map(|e| match &e.body {
                EventBody::Command(CommandRecord::BeginPhase { .. }) => Some("begin"),
                EventBody::Command(CommandRecord::EndPhase { .. }) => Some("end"),
                EventBody::Metric(m) if m.scope == MetricScope::Final => Some("final"),
                _ => None,
            })
            .collect();
        assert_eq!(kinds, vec!["begin", "end", "final"]);
        assert!(result.metrics.tasks_spawned > 0);
        assert!((result.metrics.elapsed - 20.0).abs() < 1e-9);
    }
}
