//! Task-density sweeps with the simulated operator.

use std::fmt::Write as _;

use crate::config::{Phase, Scenario};
use crate::events::{AdaptationOutcome, EventBody};
use crate::operator::OperatorModel;
use crate::session::run_headless;
use crate::{SessionConfig, SessionError};

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub scenario: Scenario,
    pub density: f64,
    pub tasks_spawned: u64,
    pub tasks_completed: u64,
    pub completion_efficiency: f64,
    pub level_changes: usize,
    pub final_level: u8,
}

/// Parses `start:stop:step` (inclusive) or a comma list.
pub fn parse_sweep(spec: &str) -> Result<Vec<f64>, SessionError> {
    let bad = || SessionError::Config(format!("bad density sweep {spec:?}, expected start:stop:step or a,b,c"));
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
    let values = if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        let [a, b, step] = parts[..] else { return Err(bad()) };
        let (a, b, step) = (num(a)?, num(b)?, num(step)?);
        if !(step > 0.0) || b < a {
            return Err(bad());
        }
        let n = ((b - a) / step + 1e-9).floor() as usize;
        (0..=n).map(|k| a + step * k as f64).collect()
    } else {
        spec.split(',').map(num).collect::<Result<Vec<_>, _>>()?
    };
    if values.is_empty() || values.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
        return Err(bad());
    }
    Ok(values)
}

/// One headless run per density, all from `base` with a single phase.
pub fn density_sweep(base: &SessionConfig, scenario: Scenario, densities: &[f64]) -> Result<Vec<BenchRow>, SessionError> {
    densities
        .iter()
        .map(|&density| {
            let mut config = base.clone();
            config.scenario = scenario;
            config.record_path = None;
            config.signal_record_path = None;
            config.phases = vec![Phase {
                name: "bench".into(),
                condition: "bench".into(),
                start: 0.0,
                duration: config.duration,
                task_density: density,
                activation: 0.0,
            }];
            config.operator.get_or_insert_with(OperatorModel::default);
            let result = run_headless(config)?;
            let mut final_level = base.starting_level().get();
            let mut level_changes = 0;
            for e in &result.events {
                match &e.body {
                    EventBody::Adaptation(r) if matches!(r.outcome, AdaptationOutcome::Applied | AdaptationOutcome::Confirmed) => {
                        level_changes += 1;
                        final_level = r.decision.to_level.get();
                    }
                    EventBody::TickSummary(s) => final_level = s.level,
                    _ => {}
                }
            }
            Ok(BenchRow {
                scenario,
                density,
                tasks_spawned: result.metrics.tasks_spawned,
                tasks_completed: result.metrics.tasks_completed,
                completion_efficiency: neuroswarm_core::swarm::completion_efficiency(&result.metrics),
                level_changes,
                final_level,
            })
        })
        .collect()
}

pub fn rows_csv(rows: &[BenchRow]) -> String {
    let mut out = String::from("scenario,density,tasks_spawned,tasks_completed,completion_efficiency,level_changes,final_level\n");
    for r in rows {
        let scenario = match r.scenario {
            Scenario::Individual => "individual",
            Scenario::Heatmap => "heatmap",
        };
        let _ = writeln!(
            out,
            "{scenario},{},{},{},{},{},{}",
            r.density, r.tasks_spawned, r.tasks_completed, r.completion_efficiency, r.level_changes, r.final_level
        );
    }
    out
}
