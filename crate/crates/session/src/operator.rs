//! Scripted stand-in for a human operator, used by `bench` and headless runs.

use std::collections::BTreeSet;

use neuroswarm_core::heatmap::{build_heatmap, selection_members, AbstractionLevel, HeatmapView};
use neuroswarm_core::swarm::{AgentStatus, SimState};
use serde::{Deserialize, Serialize};

use crate::command::Command;
use crate::SessionError;

/// Every `interval` seconds the operator looks at the display and acts.
///
/// At level 1 it matches up to `individual_actions` idle agents to their
/// nearest untargeted task. At binned levels it sends one cluster command:
/// every agent in a cell holding an idle agent, against the tasks of the
/// `cluster_cells` cells with the most untargeted tasks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OperatorModel {
    pub interval: f64,
    pub individual_actions: usize,
    pub cluster_cells: usize,
    /// Accept adaptation suggestions after `confirm_delay` seconds.
    pub confirm_suggestions: bool,
    pub confirm_delay: f64,
}

impl Default for OperatorModel {
    fn default() -> Self {
        Self { interval: 2.0, individual_actions: 3, cluster_cells: 2, confirm_suggestions: true, confirm_delay: 3.0 }
    }
}

impl OperatorModel {
    pub fn validate(&self) -> Result<(), SessionError> {
        if !(self.interval > 0.0) || self.confirm_delay < 0.0 {
            return Err(SessionError::Config("operator interval must be positive and confirm_delay >= 0".into()));
        }
        Ok(())
    }

    pub fn decide(&self, sim: &SimState<f64>, level: AbstractionLevel) -> Vec<Command> {
        let targeted: BTreeSet<u32> = sim.agents.iter().flat_map(|a| a.assignment_queue.iter().copied()).collect();
        let idle: Vec<u32> = sim.agents.iter().filter(|a| a.status == AgentStatus::Idle).map(|a| a.id).collect();
        if idle.is_empty() {
            return Vec::new();
        }
        if level == AbstractionLevel::MIN {
            let mut free: Vec<u32> = sim.open_tasks().map(|t| t.id).filter(|id| !targeted.contains(id)).collect();
            let mut out = Vec::new();
            for &agent_id in idle.iter().take(self.individual_actions) {
                let pos = sim.agents[agent_id as usize].position;
                let nearest = free
                    .iter()
                    .enumerate()
                    .map(|(i, &t)| (pos.distance(&sim.tasks[t as usize].position), t, i))
                    .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                let Some((_, task_id, i)) = nearest else { break };
                free.remove(i);
                out.push(Command::AssignAgent { agent_id, task_id });
            }
            return out;
        }

        let Ok(HeatmapView::Grid(grid)) = build_heatmap(&sim.agents, &sim.tasks, level, &sim.config) else {
            return Vec::new();
        };
        let mut task_cells: Vec<(usize, usize, usize)> = grid
            .cells
            .iter()
            .map(|c| (c.task_ids.iter().filter(|t| !targeted.contains(t)).count(), c.row, c.col))
            .filter(|c| c.0 > 0)
            .collect();
        task_cells.sort_by(|a, b| b.0.cmp(&a.0).then((a.1, a.2).cmp(&(b.1, b.2))));
        let task_cells: Vec<(usize, usize)> = task_cells.iter().take(self.cluster_cells).map(|c| (c.1, c.2)).collect();
        if task_cells.is_empty() {
            return Vec::new();
        }
        let agent_cells: Vec<(usize, usize)> = grid
            .cells
            .iter()
            .filter(|c| c.agent_ids.iter().any(|a| idle.binary_search(a).is_ok()))
            .map(|c| (c.row, c.col))
            .collect();
        match selection_members(&grid, &agent_cells, &task_cells) {
            Ok((agent_ids, task_ids)) if !agent_ids.is_empty() && !task_ids.is_empty() => {
                vec![Command::AssignCluster { agent_ids, task_ids }]
            }
            _ => Vec::new(),
        }
    }
}
