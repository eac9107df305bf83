//! Deterministic discrete-time swarm simulation.
//!
//! Agents travel in straight lines at constant speed to the head of their
//! assignment queue, switch to working once strictly inside
//! [`CAPTURE_RADIUS`] of it, and deplete its remaining work at `work_rate`
//! per second. Work rates of agents sharing a task add up.

pub mod alloc;

use std::collections::VecDeque;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::{Point, Real};

/// Distance below which an agent counts as being at its task.
pub const CAPTURE_RADIUS: f64 = 1.0;

/// Largest accepted integration step, in seconds.
pub const MAX_TICK_DT: f64 = 0.1;

/// Relative residual below which a task's remaining work snaps to zero.
const WORK_EPSILON: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SwarmError {
    #[error("invalid world config: {0}")]
    InvalidConfig(String),
    #[error("unknown agent id {0}")]
    UnknownAgent(u32),
    #[error("unknown task id {0}")]
    UnknownTask(u32),
    #[error("task {0} is already done")]
    TaskDone(u32),
    #[error("empty {0} set")]
    EmptySet(&'static str),
    #[error("every task in the set is already done: {0:?}")]
    AllTasksDone(Vec<u32>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real", default)]
pub struct WorldConfig<T> {
    pub width: T,
    pub height: T,
    pub agent_count: usize,
    pub agent_speed: T,
    pub work_rate: T,
    pub task_work: T,
    pub tick_dt: T,
    pub rng_seed: u64,
}

impl<T: Real> Default for WorldConfig<T> {
    fn default() -> Self {
        Self {
            width: T::lit(100.0),
            height: T::lit(100.0),
            agent_count: 20,
            agent_speed: T::lit(2.0),
            work_rate: T::lit(1.0),
            task_work: T::lit(5.0),
            tick_dt: T::lit(0.1),
            rng_seed: 42,
        }
    }
}

impl<T: Real> WorldConfig<T> {
    pub fn validate(&self) -> Result<(), SwarmError> {
        let positive = [
            ("width", self.width),
            ("height", self.height),
            ("agent_speed", self.agent_speed),
            ("work_rate", self.work_rate),
            ("task_work", self.task_work),
            ("tick_dt", self.tick_dt),
        ];
        for (name, v) in positive {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(SwarmError::InvalidConfig(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if self.agent_count == 0 {
            return Err(SwarmError::InvalidConfig("agent_count must be at least 1".into()));
        }
        if self.tick_dt > T::lit(MAX_TICK_DT) {
            return Err(SwarmError::InvalidConfig(format!(
                "tick_dt must be <= {MAX_TICK_DT} s, got {}",
                self.tick_dt
            )));
        }
        Ok(())
    }

    pub fn contains(&self, p: &Point<T>) -> bool {
        p.x >= T::zero() && p.x <= self.width && p.y >= T::zero() && p.y <= self.height
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentStatus {
    Idle,
    Moving,
    Working,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Agent<T> {
    pub id: u32,
    pub position: Point<T>,
    pub status: AgentStatus,
    pub assignment_queue: VecDeque<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskStatus {
    Open,
    Done,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Task<T> {
    pub id: u32,
    pub position: Point<T>,
    pub work_remaining: T,
    pub status: TaskStatus,
}

impl<T: Real> Task<T> {
    pub fn is_open(&self) -> bool {
        self.status == TaskStatus::Open
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Metrics<T> {
    pub tasks_completed: u64,
    pub tasks_spawned: u64,
    pub total_agent_busy_time: T,
    pub elapsed: T,
}

/// Fraction of spawned tasks that have been completed (0 when none spawned).
pub fn completion_efficiency<T: Real>(metrics: &Metrics<T>) -> T {
    if metrics.tasks_spawned == 0 {
        return T::zero();
    }
    T::from_u64(metrics.tasks_completed).unwrap_or_else(T::zero)
        / T::from_u64(metrics.tasks_spawned).unwrap_or_else(T::one)
}

/// Result of a cluster assignment: done tasks that were skipped.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ClusterOutcome {
    pub skipped_done: Vec<u32>,
}

/// Simulation state. Agent and task ids equal their index in the vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct SimState<T> {
    pub config: WorldConfig<T>,
    pub ticks: u64,
    pub clock: T,
    pub agents: Vec<Agent<T>>,
    pub tasks: Vec<Task<T>>,
    pub metrics: Metrics<T>,
}

fn uniform_point<T: Real, R: Rng + ?Sized>(rng: &mut R, width: T, height: T) -> Point<T> {
    let x: f64 = rng.random();
    let y: f64 = rng.random();
    Point::new(T::lit(x) * width, T::lit(y) * height)
}

impl<T: Real> SimState<T> {
    /// Places `agent_count` idle agents uniformly using the config seed.
    pub fn init(config: WorldConfig<T>) -> Result<Self, SwarmError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
        let agents = (0..config.agent_count)
            .map(|i| Agent {
                id: i as u32,
                position: uniform_point(&mut rng, config.width, config.height),
                status: AgentStatus::Idle,
                assignment_queue: VecDeque::new(),
            })
            .collect();
        Ok(Self {
            config,
            ticks: 0,
            clock: T::zero(),
            agents,
            tasks: Vec::new(),
            metrics: Metrics::default(),
        })
    }

    /// Poisson task arrivals at `density` tasks/s over one tick interval.
    pub fn spawn_tasks<R: Rng + ?Sized>(&mut self, density: T, rng: &mut R) -> Vec<u32> {
        let lambda = (density * self.config.tick_dt).as_f64();
        if !(lambda > 0.0) {
            return Vec::new();
        }
        let count = Poisson::new(lambda).map(|d| d.sample(rng) as u64).unwrap_or(0);
        (0..count)
            .map(|_| {
                let position = uniform_point(rng, self.config.width, self.config.height);
                self.add_task(position)
            })
            .collect()
    }

    /// Adds one open task at `position` and returns its id.
    pub fn add_task(&mut self, position: Point<T>) -> u32 {
        let id = self.tasks.len() as u32;
        self.tasks.push(Task {
            id,
            position,
            work_remaining: self.config.task_work,
            status: TaskStatus::Open,
        });
        self.metrics.tasks_spawned += 1;
        id
    }

    pub fn agent(&self, id: u32) -> Result<&Agent<T>, SwarmError> {
        self.agents.get(id as usize).ok_or(SwarmError::UnknownAgent(id))
    }

    pub fn task(&self, id: u32) -> Result<&Task<T>, SwarmError> {
        self.tasks.get(id as usize).ok_or(SwarmError::UnknownTask(id))
    }

    pub fn open_tasks(&self) -> impl Iterator<Item = &Task<T>> {
        self.tasks.iter().filter(|t| t.is_open())
    }

    fn refresh_status(&mut self, agent_idx: usize) {
        let capture = T::lit(CAPTURE_RADIUS);
        let agent = &self.agents[agent_idx];
        let status = match agent.assignment_queue.front() {
            None => AgentStatus::Idle,
            Some(&tid) => {
                if agent.position.distance(&self.tasks[tid as usize].position) < capture {
                    AgentStatus::Working
                } else {
                    AgentStatus::Moving
                }
            }
        };
        self.agents[agent_idx].status = status;
    }

    /// Replaces the agent's queue with the single task.
    pub fn assign_agent(&mut self, agent_id: u32, task_id: u32) -> Result<(), SwarmError> {
        self.agent(agent_id)?;
        if !self.task(task_id)?.is_open() {
            return Err(SwarmError::TaskDone(task_id));
        }
        let idx = agent_id as usize;
        self.agents[idx].assignment_queue = VecDeque::from([task_id]);
        self.refresh_status(idx);
        Ok(())
    }

    /// Distributes the open tasks of `task_ids` over `agent_ids` with
    /// [`alloc::greedy_balanced`]. The addressed agents' queues are replaced
    /// and the tasks are withdrawn from every other agent's queue.
    pub fn assign_cluster(&mut self, agent_ids: &[u32], task_ids: &[u32]) -> Result<ClusterOutcome, SwarmError> {
        if agent_ids.is_empty() {
            return Err(SwarmError::EmptySet("agent"));
        }
        if task_ids.is_empty() {
            return Err(SwarmError::EmptySet("task"));
        }
        let mut agents: Vec<u32> = agent_ids.to_vec();
        agents.sort_unstable();
        agents.dedup();
        let mut tasks: Vec<u32> = task_ids.to_vec();
        tasks.sort_unstable();
        tasks.dedup();
        for &a in &agents {
            self.agent(a)?;
        }
        let mut skipped_done = Vec::new();
        let mut open = Vec::new();
        for &t in &tasks {
            if self.task(t)?.is_open() {
                open.push(t);
            } else {
                skipped_done.push(t);
            }
        }
        if open.is_empty() {
            return Err(SwarmError::AllTasksDone(skipped_done));
        }

        let agent_pos: Vec<(u32, Point<T>)> =
            agents.iter().map(|&a| (a, self.agents[a as usize].position)).collect();
        let task_pos: Vec<(u32, Point<T>)> =
            open.iter().map(|&t| (t, self.tasks[t as usize].position)).collect();
        let queues = alloc::greedy_balanced(&agent_pos, &task_pos);

        for idx in 0..self.agents.len() {
            let id = idx as u32;
            if agents.binary_search(&id).is_ok() {
                continue;
            }
            let q = &mut self.agents[idx].assignment_queue;
            let before = q.len();
            q.retain(|t| open.binary_search(t).is_err());
            if q.len() != before {
                self.refresh_status(idx);
            }
        }
        for (&a, q) in agents.iter().zip(queues) {
            self.agents[a as usize].assignment_queue = q.into();
            self.refresh_status(a as usize);
        }
        Ok(ClusterOutcome { skipped_done })
    }

    /// Advances the world by one `tick_dt`. Returns ids of tasks completed in this tick.
    pub fn tick(&mut self) -> Vec<u32> {
        let dt = self.config.tick_dt;
        let capture = T::lit(CAPTURE_RADIUS);
        let step = self.config.agent_speed * dt;

        let busy = self.agents.iter().filter(|a| a.status != AgentStatus::Idle).count();
        self.metrics.total_agent_busy_time = self.metrics.total_agent_busy_time + T::from_usize_lossy(busy) * dt;

        // motion
        for agent in &mut self.agents {
            let Some(&tid) = agent.assignment_queue.front() else {
                agent.status = AgentStatus::Idle;
                continue;
            };
            let target = self.tasks[tid as usize].position;
            let d = agent.position.distance(&target);
            if d < capture {
                agent.status = AgentStatus::Working;
                continue;
            }
            if d <= step {
                agent.position = target;
            } else {
                let k = step / d;
                agent.position = Point::new(
                    agent.position.x + (target.x - agent.position.x) * k,
                    agent.position.y + (target.y - agent.position.y) * k,
                );
            }
            agent.status = if agent.position.distance(&target) < capture {
                AgentStatus::Working
            } else {
                AgentStatus::Moving
            };
        }

        // work, stacked additively per task
        let mut rate_sum = vec![T::zero(); self.tasks.len()];
        for agent in &self.agents {
            if agent.status == AgentStatus::Working {
                if let Some(&tid) = agent.assignment_queue.front() {
                    rate_sum[tid as usize] = rate_sum[tid as usize] + self.config.work_rate;
                }
            }
        }
        let eps = self.config.task_work * T::lit(WORK_EPSILON);
        let mut completed = Vec::new();
        for (task, rate) in self.tasks.iter_mut().zip(rate_sum) {
            if !task.is_open() || rate == T::zero() {
                continue;
            }
            let left = task.work_remaining - rate * dt;
            if left <= eps {
                task.work_remaining = T::zero();
                task.status = TaskStatus::Done;
                completed.push(task.id);
            } else {
                task.work_remaining = left;
            }
        }

        if !completed.is_empty() {
            for idx in 0..self.agents.len() {
                let q = &mut self.agents[idx].assignment_queue;
                let before = q.len();
                q.retain(|t| completed.binary_search(t).is_err());
                if q.len() != before {
                    self.refresh_status(idx);
                }
            }
            self.metrics.tasks_completed += completed.len() as u64;
        }

        self.ticks += 1;
        self.clock = T::from_u64(self.ticks).unwrap_or_else(T::zero) * dt;
        self.metrics.elapsed = self.clock;
        completed
    }
}

/// Seeded generator used for task spawning and synthetic signals.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(agents: usize) -> WorldConfig<f64> {
        WorldConfig { agent_count: agents, ..WorldConfig::default() }
    }

    /// World with agents and tasks at hand-placed positions.
    fn placed(agent_pos: &[(f64, f64)], task_pos: &[(f64, f64)], speed: f64) -> SimState<f64> {
        let mut s = SimState::init(WorldConfig {
            agent_count: agent_pos.len(),
            agent_speed: speed,
            work_rate: 1.0,
            task_work: 1.0,
            ..WorldConfig::default()
        })
        .unwrap();
        for (a, &(x, y)) in s.agents.iter_mut().zip(agent_pos) {
            a.position = Point::new(x, y);
        }
        for &(x, y) in task_pos {
            s.add_task(Point::new(x, y));
        }
        s
    }

    #[test]
    fn init_places_idle_agents() {
        let s = SimState::init(WorldConfig { agent_count: 10, rng_seed: 42, ..config(10) }).unwrap();
        assert_eq!(s.agents.len(), 10);
        assert!(s.agents.iter().all(|a| a.status == AgentStatus::Idle));
        assert!(s.agents.iter().all(|a| s.config.contains(&a.position)));
        assert_eq!(s.clock, 0.0);
        assert!(s.tasks.is_empty());
    }

    #[test]
    fn init_is_deterministic() {
        let a = SimState::init(config(10)).unwrap();
        let b = SimState::init(config(10)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn init_rejects_bad_config() {
        assert!(matches!(SimState::init(config(0)), Err(SwarmError::InvalidConfig(_))));
        let bad_dt = WorldConfig { tick_dt: 0.2, ..config(3) };
        let err = SimState::init(bad_dt).unwrap_err();
        assert!(err.to_string().contains("tick_dt"));
        let bad_w = WorldConfig { width: -1.0, ..config(3) };
        assert!(SimState::init(bad_w).unwrap_err().to_string().contains("width"));
    }

    #[test]
    fn zero_density_spawns_nothing() {
        let mut s = SimState::init(config(2)).unwrap();
        let mut rng = seeded_rng(1);
        for _ in 0..1000 {
            s.spawn_tasks(0.0, &mut rng);
        }
        assert!(s.tasks.is_empty());
    }

    #[test]
    fn spawn_sequence_is_seeded() {
        let run = || {
            let mut s = SimState::init(config(2)).unwrap();
            let mut rng = seeded_rng(9);
            for _ in 0..200 {
                s.spawn_tasks(3.0, &mut rng);
            }
            s.tasks
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn assign_moves_idle_agent() {
        let mut s = placed(&[(10.0, 10.0)], &[(50.0, 50.0)], 1.0);
        s.assign_agent(0, 0).unwrap();
        assert_eq!(s.agents[0].status, AgentStatus::Moving);
    }

    #[test]
    fn assign_within_radius_starts_working() {
        let mut s = placed(&[(10.0, 10.0)], &[(10.5, 10.0)], 1.0);
        s.assign_agent(0, 0).unwrap();
        assert_eq!(s.agents[0].status, AgentStatus::Working);
    }

    #[test]
    fn assign_errors() {
        let mut s = placed(&[(10.0, 10.0)], &[(10.5, 10.0)], 1.0);
        assert_eq!(s.assign_agent(3, 0), Err(SwarmError::UnknownAgent(3)));
        assert_eq!(s.assign_agent(0, 7), Err(SwarmError::UnknownTask(7)));
        s.tasks[0].status = TaskStatus::Done;
        s.tasks[0].work_remaining = 0.0;
        assert_eq!(s.assign_agent(0, 0), Err(SwarmError::TaskDone(0)));
    }

    #[test]
    fn reassignment_replaces_target() {
        let mut s = placed(&[(10.0, 10.0)], &[(50.0, 50.0), (80.0, 20.0)], 1.0);
        s.assign_agent(0, 0).unwrap();
        s.tick();
        s.assign_agent(0, 1).unwrap();
        assert_eq!(s.agents[0].assignment_queue, VecDeque::from([1]));
    }

    #[test]
    fn one_tick_of_motion() {
        let mut s = placed(&[(10.0, 10.0)], &[(11.0, 10.0)], 1.0);
        s.assign_agent(0, 0).unwrap();
        assert_eq!(s.agents[0].status, AgentStatus::Moving);
        s.tick();
        let d = s.agents[0].position.distance(&s.tasks[0].position);
        assert!((d - 0.9).abs() < 1e-12, "d={d}");
    }

    #[test]
    fn single_agent_finishes_unit_task_in_ten_ticks() {
        let mut s = placed(&[(10.0, 10.0)], &[(10.0, 10.0)], 1.0);
        s.assign_agent(0, 0).unwrap();
        for _ in 0..9 {
            s.tick();
            assert!(s.tasks[0].is_open());
        }
        assert_eq!(s.tick(), vec![0]);
        assert_eq!(s.tasks[0].work_remaining, 0.0);
        assert_eq!(s.agents[0].status, AgentStatus::Idle);
        assert!(s.agents[0].assignment_queue.is_empty());
        assert_eq!(s.metrics.tasks_completed, 1);
    }

    #[test]
    fn two_agents_halve_the_work_time() {
        let mut s = placed(&[(10.0, 10.0), (10.2, 10.0)], &[(10.0, 10.0)], 1.0);
        s.assign_agent(0, 0).unwrap();
        s.assign_agent(1, 0).unwrap();
        let mut ticks = 0;
        while s.tasks[0].is_open() {
            s.tick();
            ticks += 1;
        }
        assert_eq!(ticks, 5);
    }

    #[test]
    fn cluster_errors() {
        let mut s = placed(&[(10.0, 10.0)], &[(20.0, 20.0)], 1.0);
        assert_eq!(s.assign_cluster(&[], &[0]), Err(SwarmError::EmptySet("agent")));
        assert_eq!(s.assign_cluster(&[0], &[]), Err(SwarmError::EmptySet("task")));
        s.tasks[0].status = TaskStatus::Done;
        assert_eq!(s.assign_cluster(&[0], &[0]), Err(SwarmError::AllTasksDone(vec![0])));
    }

    #[test]
    fn cluster_skips_done_and_withdraws_from_others() {
        let mut s = placed(&[(10.0, 10.0), (30.0, 30.0), (90.0, 90.0)], &[(12.0, 10.0), (28.0, 30.0), (50.0, 50.0)], 1.0);
        s.assign_agent(2, 2).unwrap();
        s.tasks[0].status = TaskStatus::Done;
        let out = s.assign_cluster(&[0, 1], &[0, 1, 2]).unwrap();
        assert_eq!(out.skipped_done, vec![0]);
        assert!(s.agents[2].assignment_queue.is_empty());
        assert_eq!(s.agents[2].status, AgentStatus::Idle);
        let mut all: Vec<u32> = s.agents[..2].iter().flat_map(|a| a.assignment_queue.iter().copied()).collect();
        all.sort_unstable();
        assert_eq!(all, vec![1, 2]);
    }

    #[test]
    fn completion_efficiency_arithmetic() {
        let mut m = Metrics::<f64>::default();
        assert_eq!(completion_efficiency(&m), 0.0);
        m.tasks_spawned = 10;
        m.tasks_completed = 10;
        assert_eq!(completion_efficiency(&m), 1.0);
        m.tasks_spawned = 20;
        m.tasks_completed = 5;
        assert_eq!(completion_efficiency(&m), 0.25);
    }

    #[test]
    fn works_in_f32() {
        let mut s = SimState::<f32>::init(WorldConfig { agent_count: 3, ..WorldConfig::default() }).unwrap();
        let t = s.add_task(Point::new(5.0, 5.0));
        s.assign_agent(0, t).unwrap();
        for _ in 0..2000 {
            s.tick();
        }
        assert_eq!(s.metrics.tasks_completed, 1);
    }
}
