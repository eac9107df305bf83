//! Hysteresis policy mapping the workload index stream to abstraction-level steps.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::glm::workload::WorkloadIndex;
use crate::heatmap::AbstractionLevel;
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AdaptError {
    #[error("history spans {have} s, policy needs {need} s")]
    InsufficientHistory { have: f64, need: f64 },
    #[error("history timestamps decrease at index {0}")]
    UnorderedHistory(usize),
    #[error("invalid policy: {0}")]
    InvalidPolicy(String),
    #[error("no pending suggestion with id {0}")]
    UnknownSuggestion(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AdaptMode {
    Automatic,
    #[default]
    SuggestOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real", default)]
pub struct PolicyConfig<T> {
    pub high_threshold: T,
    pub low_threshold: T,
    /// Seconds a threshold must be exceeded without interruption.
    pub sustain: T,
    /// Minimum seconds between two non-hold decisions.
    pub cooldown: T,
    pub min_level: AbstractionLevel,
    pub max_level: AbstractionLevel,
    pub mode: AdaptMode,
}

impl<T: Real> Default for PolicyConfig<T> {
    fn default() -> Self {
        Self {
            high_threshold: T::lit(0.7),
            low_threshold: T::lit(0.3),
            sustain: T::lit(10.0),
            cooldown: T::lit(30.0),
            min_level: AbstractionLevel::MIN,
            max_level: AbstractionLevel::MAX,
            mode: AdaptMode::SuggestOnly,
        }
    }
}

impl<T: Real> PolicyConfig<T> {
    pub fn validate(&self) -> Result<(), AdaptError> {
        let ok = T::zero() <= self.low_threshold
            && self.low_threshold < self.high_threshold
            && self.high_threshold <= T::one();
        if !ok {
            return Err(AdaptError::InvalidPolicy(format!(
                "need 0 <= low ({}) < high ({}) <= 1",
                self.low_threshold, self.high_threshold
            )));
        }
        if !(self.sustain > T::zero()) || !(self.cooldown > T::zero()) {
            return Err(AdaptError::InvalidPolicy("sustain and cooldown must be positive".into()));
        }
        if self.min_level > self.max_level {
            return Err(AdaptError::InvalidPolicy("min_level above max_level".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Raise,
    Lower,
    Hold,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct AdaptationDecision<T> {
    pub timestamp: T,
    pub action: Action,
    pub from_level: AbstractionLevel,
    pub to_level: AbstractionLevel,
    /// Threshold that was crossed, for raise/lower.
    pub threshold: Option<T>,
    /// How long the threshold had been exceeded, seconds.
    pub sustained_for: T,
    pub reason: String,
}

/// Seconds the trailing samples have continuously satisfied `pred`,
/// measured from the first sample of the run (not before `not_before`).
fn trailing_run<T: Real>(history: &[WorkloadIndex<T>], not_before: Option<T>, pred: impl Fn(T) -> bool) -> T {
    let Some(last) = history.last() else {
        return T::zero();
    };
    let mut start = None;
    for idx in history.iter().rev() {
        if !pred(idx.value) || not_before.is_some_and(|nb| idx.timestamp < nb) {
            break;
        }
        start = Some(idx.timestamp);
    }
    start.map_or(T::zero(), |s| last.timestamp - s)
}

/// Pure policy step over a history ordered by timestamp.
pub fn decide<T: Real>(
    history: &[WorkloadIndex<T>],
    current_level: AbstractionLevel,
    last_change_time: Option<T>,
    config: &PolicyConfig<T>,
) -> Result<AdaptationDecision<T>, AdaptError> {
    if let Some(i) = history.windows(2).position(|w| w[1].timestamp < w[0].timestamp) {
        return Err(AdaptError::UnorderedHistory(i + 1));
    }
    let (first, last) = match (history.first(), history.last()) {
        (Some(f), Some(l)) => (f, l),
        _ => return Err(AdaptError::InsufficientHistory { have: 0.0, need: config.sustain.as_f64() }),
    };
    let span = last.timestamp - first.timestamp;
    if span < config.sustain {
        return Err(AdaptError::InsufficientHistory { have: span.as_f64(), need: config.sustain.as_f64() });
    }
    let now = last.timestamp;
    let hold = |reason: String, sustained_for: T| AdaptationDecision {
        timestamp: now,
        action: Action::Hold,
        from_level: current_level,
        to_level: current_level,
        threshold: None,
        sustained_for,
        reason,
    };
    let cooled = last_change_time.is_none_or(|t| now - t >= config.cooldown);

    let above = trailing_run(history, last_change_time, |v| v > config.high_threshold);
    if above >= config.sustain {
        if current_level >= config.max_level {
            return Ok(hold(format!("index above {} for {above} s but level is at its maximum", config.high_threshold), above));
        }
        if !cooled {
            return Ok(hold("cooldown has not elapsed".into(), above));
        }
        return Ok(AdaptationDecision {
            timestamp: now,
            action: Action::Raise,
            from_level: current_level,
            to_level: current_level.raised(),
            threshold: Some(config.high_threshold),
            sustained_for: above,
            reason: format!("index above {} for {above} s", config.high_threshold),
        });
    }
    let below = trailing_run(history, last_change_time, |v| v < config.low_threshold);
    if below >= config.sustain {
        if current_level <= config.min_level {
            return Ok(hold(format!("index below {} for {below} s but level is at its minimum", config.low_threshold), below));
        }
        if !cooled {
            return Ok(hold("cooldown has not elapsed".into(), below));
        }
        return Ok(AdaptationDecision {
            timestamp: now,
            action: Action::Lower,
            from_level: current_level,
            to_level: current_level.lowered(),
            threshold: Some(config.low_threshold),
            sustained_for: below,
            reason: format!("index below {} for {below} s", config.low_threshold),
        });
    }
    Ok(hold("no threshold sustained".into(), above.max(below)))
}

/// Decision awaiting operator confirmation in suggest-only mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Suggestion<T> {
    pub id: u64,
    pub decision: AdaptationDecision<T>,
}

/// What the engine produced for one workload sample.
#[derive(Debug, Clone, PartialEq)]
pub enum EngineOutput<T> {
    Applied(AdaptationDecision<T>),
    Suggested(Suggestion<T>),
}

/// Stateful wrapper around [`decide`]: keeps recent history, the current
/// level and the time of the last non-hold decision.
///
/// In suggest-only mode a suggestion also starts the cooldown, so the
/// rate limit holds whether or not the operator confirms it. A manual
/// level change resets the cooldown.
#[derive(Debug, Clone)]
pub struct AdaptationEngine<T> {
    config: PolicyConfig<T>,
    level: AbstractionLevel,
    last_change: Option<T>,
    history: Vec<WorkloadIndex<T>>,
    pending: Option<Suggestion<T>>,
    next_id: u64,
}

impl<T: Real> AdaptationEngine<T> {
    pub fn new(config: PolicyConfig<T>, level: AbstractionLevel) -> Result<Self, AdaptError> {
        config.validate()?;
        Ok(Self { config, level, last_change: None, history: Vec::new(), pending: None, next_id: 1 })
    }

    pub fn level(&self) -> AbstractionLevel {
        self.level
    }

    pub fn config(&self) -> &PolicyConfig<T> {
        &self.config
    }

    pub fn pending(&self) -> Option<&Suggestion<T>> {
        self.pending.as_ref()
    }

    pub fn observe(&mut self, index: WorkloadIndex<T>) -> Option<EngineOutput<T>> {
        let now = index.timestamp;
        self.history.push(index);
        let keep_from = now - self.config.sustain * T::lit(2.0) - T::one();
        let cut = self.history.iter().position(|h| h.timestamp >= keep_from).unwrap_or(0);
        self.history.drain(..cut);

        let decision = decide(&self.history, self.level, self.last_change, &self.config).ok()?;
        if decision.action == Action::Hold {
            return None;
        }
        self.last_change = Some(now);
        match self.config.mode {
            AdaptMode::Automatic => {
                self.level = decision.to_level;
                Some(EngineOutput::Applied(decision))
            }
            AdaptMode::SuggestOnly => {
                let s = Suggestion { id: self.next_id, decision };
                self.next_id += 1;
                self.pending = Some(s.clone());
                Some(EngineOutput::Suggested(s))
            }
        }
    }

    /// Applies the pending suggestion with `id`.
    pub fn confirm(&mut self, id: u64, now: T) -> Result<AdaptationDecision<T>, AdaptError> {
        match self.pending.take() {
            Some(s) if s.id == id => {
                self.level = s.decision.to_level;
                self.last_change = Some(now);
                Ok(s.decision)
            }
            other => {
                self.pending = other;
                Err(AdaptError::UnknownSuggestion(id))
            }
        }
    }

    pub fn dismiss(&mut self, id: u64) -> Result<Suggestion<T>, AdaptError> {
        match self.pending.take() {
            Some(s) if s.id == id => Ok(s),
            other => {
                self.pending = other;
                Err(AdaptError::UnknownSuggestion(id))
            }
        }
    }

    /// Operator moved the slider.
    pub fn manual_set(&mut self, level: AbstractionLevel, now: T) {
        self.level = level;
        self.last_change = Some(now);
        self.pending = None;
    }
}
