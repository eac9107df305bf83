//! Re-simulation of a recorded session.
//!
//! The world is rebuilt from the logged configuration and every applied
//! command is re-applied at its logged step. Logged workload samples and
//! adaptation events are re-emitted as they are, so replay needs neither
//! the signal source nor the estimator.

use std::thread;
use std::time::{Duration, Instant};

use neuroswarm_core::heatmap::AbstractionLevel;
use neuroswarm_core::swarm::Metrics;

use crate::command::Command;
use crate::events::{final_metrics, header, timestamp, AdaptationOutcome, CommandRecord, EventBody, SessionEvent};
use crate::protocol::WireMessage;
use crate::session::{heatmap_message, logged_commands, snapshot_of, DeltaTracker, World, DELTA_INTERVAL};
use crate::SessionError;

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayReport {
    pub recorded: Metrics<f64>,
    pub replayed: Metrics<f64>,
    pub messages: usize,
}

/// Replays `events`, pacing session time at `speed`× wall clock and
/// passing each wire message to `sink`. Errors if the replayed final
/// metrics differ from the recorded ones.
pub fn replay(
    events: &[SessionEvent],
    speed: f64,
    mut sink: impl FnMut(WireMessage) -> Result<(), SessionError>,
) -> Result<ReplayReport, SessionError> {
    if !(speed > 0.0) || !speed.is_finite() {
        return Err(SessionError::Replay(format!("speed must be a positive finite number, got {speed}")));
    }
    let config = header(events)?.clone();
    let recorded = final_metrics(events)
        .cloned()
        .ok_or_else(|| SessionError::Replay("log has no final metrics (session did not finish)".into()))?;
    let mut world = World::new(&config)?;
    let commands = logged_commands(events);
    let mut level = config.starting_level();
    let dt = config.world.tick_dt;
    let total_steps = (config.duration / dt).round() as u64;
    let delta_every = ((DELTA_INTERVAL / dt).ceil() as u64).max(1);
    let mut deltas = DeltaTracker::new(&world.sim);
    let mut messages = 0usize;
    let mut emit = |m: WireMessage| {
        messages += 1;
        sink(m)
    };

    emit(WireMessage::StateSnapshot { t: timestamp(0.0), state: snapshot_of(&world, &config, level) })?;
    emit(heatmap_message(&world.sim, level, 0.0)?)?;

    let started = Instant::now();
    let mut cursor = 0usize;
    for step in 0..total_steps {
        let t = step as f64 * dt;
        let t_end = (step + 1) as f64 * dt;
        for cmd in commands.get(&step).into_iter().flatten() {
            world.apply(cmd);
            if let Command::SetLevel { level: l } = cmd {
                level = AbstractionLevel::new(*l).map_err(|e| SessionError::Replay(e.to_string()))?;
            }
        }
        let density = config.phase_at(t).map_or(0.0, |p| p.task_density);
        deltas.completed(world.advance(density));

        while cursor < events.len() && events[cursor].tick <= step {
            let e = &events[cursor];
            cursor += 1;
            match &e.body {
                EventBody::WorkloadSample(index) => {
                    emit(WireMessage::Workload { t: e.t.clone(), index: index.clone() })?;
                }
                EventBody::Adaptation(r) => {
                    if matches!(r.outcome, AdaptationOutcome::Applied | AdaptationOutcome::Confirmed) {
                        level = r.decision.to_level;
                    }
                    if matches!(r.outcome, AdaptationOutcome::Applied | AdaptationOutcome::Suggested) {
                        emit(WireMessage::AdaptationSuggestion {
                            t: e.t.clone(),
                            decision_id: r.decision_id.unwrap_or(0),
                            automatic: r.outcome == AdaptationOutcome::Applied,
                            decision: r.decision.clone(),
                        })?;
                    }
                }
                EventBody::Command(CommandRecord::Issued { outcome, .. }) if outcome.is_applied() => {
                    emit(heatmap_message(&world.sim, level, e.time())?)?;
                }
                _ => {}
            }
        }
        if (step + 1) % delta_every == 0 {
            emit(WireMessage::StateDelta { t: timestamp(t_end), delta: deltas.delta(&world, level) })?;
        }

        let due = Duration::from_secs_f64(t_end / speed);
        if let Some(wait) = due.checked_sub(started.elapsed()) {
            if wait > Duration::from_micros(50) {
                thread::sleep(wait);
            }
        }
    }

    let replayed = world.sim.metrics.clone();
    if replayed != recorded {
        return Err(SessionError::Replay(format!("final metrics differ: recorded {recorded:?}, replayed {replayed:?}")));
    }
    Ok(ReplayReport { recorded, replayed, messages })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Phase;
    use crate::session::run_headless;
    use crate::SessionConfig;

    fn config() -> SessionConfig {
        SessionConfig {
            duration: 30.0,
            seed: 4,
            phases: vec![Phase {
                name: "p".into(),
                condition: "high".into(),
                start: 0.0,
                duration: 30.0,
                task_density: 1.5,
                activation: 0.0,
            }],
            operator: Some(Default::default()),
            ..SessionConfig::default()
        }
    }

    #[test]
    fn replay_reproduces_metrics() {
        let result = run_headless(config()).unwrap();
        let mut kinds = Vec::new();
        let report = replay(&result.events, 1e6, |m| {
            kinds.push(m);
            Ok(())
        })
        .unwrap();
        assert_eq!(report.replayed, result.metrics);
        assert!(result.metrics.tasks_completed > 0);
        assert!(matches!(kinds[0], WireMessage::StateSnapshot { .. }));
        assert!(kinds.iter().any(|m| matches!(m, WireMessage::StateDelta { .. })));
    }

    #[test]
    fn speed_must_be_positive() {
        let result = run_headless(config()).unwrap();
        for speed in [0.0, -1.0, f64::NAN] {
            assert!(matches!(replay(&result.events, speed, |_| Ok(())), Err(SessionError::Replay(_))));
        }
    }

    #[test]
    fn tampered_metrics_are_detected() {
        let mut events = run_headless(config()).unwrap().events;
        if let Some(EventBody::Metric(m)) = events.last_mut().map(|e| &mut e.body) {
            m.metrics.tasks_completed += 1;
        }
        assert!(replay(&events, 1e6, |_| Ok(())).is_err());
    }
}
