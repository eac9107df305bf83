//! Session configuration, read from TOML.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use neuroswarm_core::adapt::PolicyConfig;
use neuroswarm_core::fnirs::hrf::HrfParams;
use neuroswarm_core::fnirs::probe::ProbeLayout;
use neuroswarm_core::fnirs::synth::{NoiseModel, SynthBlock, SynthProtocol};
use neuroswarm_core::glm::workload::WorkloadConfig;
use neuroswarm_core::glm::{EventBlock, BASELINE_CONDITION};
use neuroswarm_core::heatmap::AbstractionLevel;
use neuroswarm_core::swarm::WorldConfig;
use serde::{Deserialize, Serialize};

use crate::command::Command;
use crate::operator::OperatorModel;
use crate::SessionError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// Operator matches single agents to single tasks; starts at level 1.
    Individual,
    #[default]
    Heatmap,
}

/// Synthetic signal generated from the phase schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticSignal {
    pub sample_rate: f64,
    pub noise: NoiseModel<f64>,
    pub hbr_ratio: f64,
    pub hrf: HrfParams<f64>,
}

impl Default for SyntheticSignal {
    fn default() -> Self {
        Self {
            sample_rate: 10.0,
            noise: NoiseModel { white_sigma: 0.3, drift_slope_per_min: 0.01, ..NoiseModel::default() },
            hbr_ratio: -1.0 / 3.0,
            hrf: HrfParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SignalSource {
    Synthetic(SyntheticSignal),
    /// Channel CSV (hemoglobin or raw intensity).
    File { path: PathBuf },
    /// TCP address streaming one JSON sample per line.
    LiveSocket { address: String },
}

impl Default for SignalSource {
    fn default() -> Self {
        Self::Synthetic(SyntheticSignal::default())
    }
}

/// One segment of the experiment schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Phase {
    pub name: String,
    /// Condition label used by `analyze`.
    #[serde(default = "rest")]
    pub condition: String,
    pub start: f64,
    pub duration: f64,
    /// Task arrivals per second.
    #[serde(default)]
    pub task_density: f64,
    /// Evoked HbO amplitude (µM) on left-DLPFC channels for synthetic sources.
    #[serde(default)]
    pub activation: f64,
}

fn rest() -> String {
    BASELINE_CONDITION.to_owned()
}

impl Phase {
    pub fn end(&self) -> f64 {
        self.start + self.duration
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CalibrationMode {
    /// Collect a resting baseline at session start and use the z-score index.
    #[default]
    Baseline,
    /// Fit the logistic classifier on a synthetic calibration run before the session.
    Classifier,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CalibrationConfig {
    pub mode: CalibrationMode,
    /// Blocks per class in the calibration run.
    pub blocks: usize,
    pub block_s: f64,
    /// Left-DLPFC HbO amplitude during high-workload calibration blocks, µM.
    pub activation: f64,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        Self { mode: CalibrationMode::Baseline, blocks: 4, block_s: 30.0, activation: 1.0 }
    }
}

/// A command issued at a fixed session time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptedCommand {
    pub at: f64,
    #[serde(flatten)]
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SessionConfig {
    pub scenario: Scenario,
    /// Session length in seconds.
    pub duration: f64,
    pub seed: u64,
    /// Starting level for the heatmap scenario.
    pub initial_level: AbstractionLevel,
    pub adaptation_enabled: bool,
    pub world: WorldConfig<f64>,
    pub signal_source: SignalSource,
    pub policy: PolicyConfig<f64>,
    pub workload: WorkloadConfig<f64>,
    pub calibration: CalibrationConfig,
    pub phases: Vec<Phase>,
    pub operator: Option<OperatorModel>,
    pub script: Vec<ScriptedCommand>,
    /// Event log destination.
    pub record_path: Option<PathBuf>,
    /// Channel CSV of every sample the session consumed.
    pub signal_record_path: Option<PathBuf>,
    /// Seconds between tick-summary events.
    pub summary_interval: f64,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            scenario: Scenario::Heatmap,
            duration: 300.0,
            seed: 1,
            initial_level: AbstractionLevel::new(3).expect("valid level"),
            adaptation_enabled: true,
            world: WorldConfig::default(),
            signal_source: SignalSource::default(),
            policy: PolicyConfig::default(),
            workload: WorkloadConfig::default(),
            calibration: CalibrationConfig::default(),
            phases: Vec::new(),
            operator: None,
            script: Vec::new(),
            record_path: None,
            signal_record_path: None,
            summary_interval: 1.0,
        }
    }
}

impl SessionConfig {
    pub fn from_toml(text: &str) -> Result<Self, SessionError> {
        let cfg: Self = toml::from_str(text).map_err(|e| SessionError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, SessionError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| SessionError::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    pub fn validate(&self) -> Result<(), SessionError> {
        let bad = |m: String| Err(SessionError::Config(m));
        self.world.validate().map_err(|e| SessionError::Config(e.to_string()))?;
        self.policy.validate().map_err(|e| SessionError::Config(e.to_string()))?;
        if !(self.duration > 0.0) {
            return bad(format!("duration must be positive, got {}", self.duration));
        }
        if !(self.summary_interval > 0.0) {
            return bad("summary_interval must be positive".into());
        }
        if !(self.workload.window_s > 0.0) || !(self.workload.step_s > 0.0) {
            return bad("workload window_s and step_s must be positive".into());
        }
        let mut spans: Vec<&Phase> = self.phases.iter().collect();
        spans.sort_by(|a, b| a.start.total_cmp(&b.start));
        for p in &spans {
            if p.start < 0.0 || !(p.duration > 0.0) || p.task_density < 0.0 {
                return bad(format!("phase {:?} needs start >= 0, duration > 0 and density >= 0", p.name));
            }
            if p.end() > self.duration + 1e-9 {
                return bad(format!("phase {:?} ends after the session ({} > {})", p.name, p.end(), self.duration));
            }
        }
        if let Some(w) = spans.windows(2).find(|w| w[1].start < w[0].end() - 1e-9) {
            return bad(format!("phases {:?} and {:?} overlap", w[0].name, w[1].name));
        }
        let mut activation: BTreeMap<&str, f64> = BTreeMap::new();
        for p in &self.phases {
            if let Some(prev) = activation.insert(&p.condition, p.activation) {
                if prev != p.activation {
                    return bad(format!("condition {:?} has two different activations", p.condition));
                }
            }
        }
        if let SignalSource::Synthetic(s) = &self.signal_source {
            if !(s.sample_rate > 0.0) {
                return bad("synthetic sample_rate must be positive".into());
            }
        }
        if self.calibration.mode == CalibrationMode::Classifier {
            if !matches!(self.signal_source, SignalSource::Synthetic(_)) {
                return bad("classifier calibration needs a synthetic signal source".into());
            }
            if self.calibration.blocks < 2 || !(self.calibration.block_s > self.workload.window_s) {
                return bad("calibration needs >= 2 blocks per class longer than the workload window".into());
            }
        }
        if let Some(op) = &self.operator {
            op.validate()?;
        }
        for s in &self.script {
            if s.at < 0.0 || s.at > self.duration {
                return bad(format!("scripted command at {} s lies outside the session", s.at));
            }
        }
        Ok(())
    }

    pub fn starting_level(&self) -> AbstractionLevel {
        match self.scenario {
            Scenario::Individual => AbstractionLevel::MIN,
            Scenario::Heatmap => self.initial_level,
        }
    }

    pub fn phase_at(&self, t: f64) -> Option<&Phase> {
        self.phases.iter().find(|p| t >= p.start && t < p.end())
    }

    /// Phase schedule as GLM event blocks.
    pub fn event_blocks(&self) -> Vec<EventBlock<f64>> {
        self.phases.iter().map(|p| EventBlock::new(p.start, p.duration, p.condition.clone())).collect()
    }

    /// Synthetic protocol for the session signal.
    pub fn synth_protocol(&self, signal: &SyntheticSignal, layout: &ProbeLayout<f64>) -> SynthProtocol<f64> {
        let left = layout.left_dlpfc_channels();
        let mut activation = BTreeMap::new();
        for p in self.phases.iter().filter(|p| p.activation != 0.0) {
            let mut amps = vec![0.0; layout.channels.len()];
            for &c in &left {
                amps[c] = p.activation;
            }
            activation.insert(p.condition.clone(), amps);
        }
        SynthProtocol {
            sample_rate: signal.sample_rate,
            duration: self.duration,
            start_time: 0.0,
            blocks: self
                .phases
                .iter()
                .map(|p| SynthBlock { onset: p.start, duration: p.duration, condition: p.condition.clone() })
                .collect(),
            activation,
            hbr_ratio: signal.hbr_ratio,
            noise: signal.noise.clone(),
            hrf: signal.hrf.clone(),
            rng_seed: self.seed.wrapping_add(1),
        }
    }

    /// Alternating rest / high calibration protocol and its labels.
    pub fn calibration_protocol(
        &self,
        signal: &SyntheticSignal,
        layout: &ProbeLayout<f64>,
    ) -> (SynthProtocol<f64>, Vec<EventBlock<f64>>) {
        let c = &self.calibration;
        let mut blocks = Vec::new();
        for k in 0..2 * c.blocks {
            let condition = if k % 2 == 0 { BASELINE_CONDITION } else { HIGH_WORKLOAD };
            blocks.push(SynthBlock { onset: k as f64 * c.block_s, duration: c.block_s, condition: condition.into() });
        }
        let mut amps = vec![0.0; layout.channels.len()];
        for ch in layout.left_dlpfc_channels() {
            amps[ch] = c.activation;
        }
        let labels = blocks.iter().map(|b| EventBlock::new(b.onset, b.duration, b.condition.clone())).collect();
        let protocol = SynthProtocol {
            sample_rate: signal.sample_rate,
            duration: 2.0 * c.blocks as f64 * c.block_s,
            start_time: 0.0,
            blocks,
            activation: BTreeMap::from([(HIGH_WORKLOAD.to_owned(), amps)]),
            hbr_ratio: signal.hbr_ratio,
            noise: signal.noise.clone(),
            hrf: signal.hrf.clone(),
            rng_seed: self.seed.wrapping_add(2),
        };
        (protocol, labels)
    }
}

/// Condition label of high-workload calibration blocks.
pub const HIGH_WORKLOAD: &str = "high";

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_toml_uses_defaults() {
        let cfg = SessionConfig::from_toml("duration = 60.0\n").unwrap();
        assert_eq!(cfg.world, WorldConfig::default());
        assert_eq!(cfg.starting_level().get(), 3);
        assert!(matches!(cfg.signal_source, SignalSource::Synthetic(_)));
    }

    #[test]
    fn individual_scenario_starts_at_level_one() {
        let cfg = SessionConfig::from_toml("scenario = \"individual\"\ninitial_level = 4\n").unwrap();
        assert_eq!(cfg.starting_level().get(), 1);
    }

    #[test]
    fn full_config_round_trips() {
        let text = r#"
            duration = 120.0
            seed = 9
            [world]
            agent_count = 12
            [signal_source]
            type = "file"
            path = "rec.csv"
            [policy]
            mode = "automatic"
            [[phases]]
            name = "busy"
            condition = "high_density"
            start = 20.0
            duration = 40.0
            task_density = 2.0
            activation = 1.0
            [[script]]
            at = 5.0
            cmd = "set_level"
            level = 4
        "#;
        let cfg = SessionConfig::from_toml(text).unwrap();
        assert_eq!(cfg.world.agent_count, 12);
        assert_eq!(cfg.script[0].command, Command::SetLevel { level: 4 });
        assert_eq!(SessionConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn overlapping_phases_are_rejected() {
        let text = r#"
            duration = 100.0
            [[phases]]
            name = "a"
            start = 0.0
            duration = 50.0
            [[phases]]
            name = "b"
            start = 40.0
            duration = 20.0
        "#;
        let err = SessionConfig::from_toml(text).unwrap_err();
        assert!(err.to_string().contains("overlap"), "{err}");
    }

    #[test]
    fn unknown_source_type_is_rejected() {
        assert!(SessionConfig::from_toml("[signal_source]\ntype = \"carrier-pigeon\"\n").is_err());
    }
}
