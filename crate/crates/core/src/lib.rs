//! Swarm simulation, heatmap abstraction, fNIRS signal processing, GLM
//! analysis, workload estimation and the adaptation policy.
//!
//! Everything numeric is generic over [`scalar::Real`] (`f32` or `f64`).
//! The root re-exports `f64` aliases for the common types; `f32` aliases
//! live in [`single`].

pub mod adapt;
pub mod fnirs;
pub mod glm;
pub mod heatmap;
pub mod linalg;
pub mod scalar;
pub mod swarm;

pub use adapt::{Action, AdaptError, AdaptMode};
pub use fnirs::{Chromophore, SignalError};
pub use glm::GlmError;
pub use heatmap::{AbstractionLevel, HeatmapError};
pub use scalar::Real;
pub use swarm::SwarmError;

pub type Point = scalar::Point<f64>;
pub type WorldConfig = swarm::WorldConfig<f64>;
pub type SimState = swarm::SimState<f64>;
pub type HeatmapView = heatmap::HeatmapView<f64>;
pub type ProbeLayout = fnirs::probe::ProbeLayout<f64>;
pub type HemoTimeSeries = fnirs::HemoTimeSeries<f64>;
pub type RawIntensitySeries = fnirs::mbll::RawIntensitySeries<f64>;
pub type SynthProtocol = fnirs::synth::SynthProtocol<f64>;
pub type EventBlock = glm::EventBlock<f64>;
pub type DesignMatrix = glm::design::DesignMatrix<f64>;
pub type GlmFit = glm::fit::GlmFit<f64>;
pub type ChannelStat = glm::contrast::ChannelStat<f64>;
pub type WorkloadConfig = glm::workload::WorkloadConfig<f64>;
pub type WorkloadIndex = glm::workload::WorkloadIndex<f64>;
pub type WorkloadModel = glm::workload::WorkloadModel<f64>;
pub type WorkloadEstimator = glm::workload::WorkloadEstimator<f64>;
pub type PolicyConfig = adapt::PolicyConfig<f64>;
pub type AdaptationDecision = adapt::AdaptationDecision<f64>;
pub type AdaptationEngine = adapt::AdaptationEngine<f64>;

/// Single-precision aliases.
pub mod single {
    use super::*;

    pub type Point = scalar::Point<f32>;
    pub type WorldConfig = swarm::WorldConfig<f32>;
    pub type SimState = swarm::SimState<f32>;
    pub type HemoTimeSeries = fnirs::HemoTimeSeries<f32>;
    pub type DesignMatrix = glm::design::DesignMatrix<f32>;
    pub type GlmFit = glm::fit::GlmFit<f32>;
    pub type WorkloadIndex = glm::workload::WorkloadIndex<f32>;
    pub type PolicyConfig = adapt::PolicyConfig<f32>;
}
