//! Density binning of agents and tasks on a five-level abstraction ladder.
//!
//! Level 1 shows individual entities. Levels 2..=5 bin onto nested dyadic
//! grids of 32, 16, 8 and 4 cells per side. Every entity is first placed in
//! the finest (32×32) grid and coarser indices are obtained by shifting, so a
//! coarse cell is always exactly the union of the fine cells it covers.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::{Point, Real};
use crate::swarm::{Agent, Task, WorldConfig};

/// Cells per side of the finest grid (level 2).
pub const FINEST_CELLS: usize = 32;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HeatmapError {
    #[error("abstraction level {0} outside 1..=5")]
    InvalidLevel(u8),
    #[error("agent {0} lies outside the world bounds")]
    AgentOutOfBounds(u32),
    #[error("task {0} lies outside the world bounds")]
    TaskOutOfBounds(u32),
    #[error("cell ({row}, {col}) outside a {rows}x{cols} grid")]
    CellOutOfRange { row: usize, col: usize, rows: usize, cols: usize },
    #[error("level 1 has no grid cells")]
    NotBinned,
}

/// Five-point slider setting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct AbstractionLevel(u8);

impl AbstractionLevel {
    pub const MIN: Self = Self(1);
    pub const MAX: Self = Self(5);

    pub fn new(level: u8) -> Result<Self, HeatmapError> {
        if (1..=5).contains(&level) {
            Ok(Self(level))
        } else {
            Err(HeatmapError::InvalidLevel(level))
        }
    }

    pub fn get(self) -> u8 {
        self.0
    }

    /// One step coarser, saturating at level 5.
    pub fn raised(self) -> Self {
        Self((self.0 + 1).min(5))
    }

    /// One step finer, saturating at level 1.
    pub fn lowered(self) -> Self {
        Self((self.0 - 1).max(1))
    }
}

impl TryFrom<u8> for AbstractionLevel {
    type Error = HeatmapError;
    fn try_from(v: u8) -> Result<Self, Self::Error> {
        Self::new(v)
    }
}

impl From<AbstractionLevel> for u8 {
    fn from(l: AbstractionLevel) -> u8 {
        l.0
    }
}

impl std::fmt::Display for AbstractionLevel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GridDims {
    /// Level 1: no binning.
    Individual,
    Binned { rows: usize, cols: usize },
}

/// Grid size for a level. The world extent does not change the cell count,
/// only the cell size.
pub fn grid_dimensions<T: Real>(level: AbstractionLevel, _world: &WorldConfig<T>) -> GridDims {
    match level.get() {
        1 => GridDims::Individual,
        l => {
            let n = FINEST_CELLS >> (l - 2);
            GridDims::Binned { rows: n, cols: n }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Cell {
    pub row: usize,
    pub col: usize,
    pub agent_count: usize,
    pub task_count: usize,
    pub agent_ids: Vec<u32>,
    pub task_ids: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Marker<T> {
    pub id: u32,
    pub position: Point<T>,
}

/// Binned view. Cells are row-major; row indexes y, column indexes x.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatmapGrid {
    pub level: AbstractionLevel,
    pub rows: usize,
    pub cols: usize,
    pub cells: Vec<Cell>,
}

/// What the operator sees at a given level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "view", rename_all = "snake_case", bound = "T: Real")]
pub enum HeatmapView<T> {
    Individual { agents: Vec<Marker<T>>, tasks: Vec<Marker<T>> },
    Grid(HeatmapGrid),
}

impl<T: Real> HeatmapView<T> {
    pub fn level(&self) -> AbstractionLevel {
        match self {
            Self::Individual { .. } => AbstractionLevel::MIN,
            Self::Grid(g) => g.level,
        }
    }

    pub fn grid(&self) -> Option<&HeatmapGrid> {
        match self {
            Self::Grid(g) => Some(g),
            Self::Individual { .. } => None,
        }
    }
}

/// Fine-grid index along one axis; interior boundaries go to the higher
/// cell and the world max edge clamps into the last cell.
fn fine_index<T: Real>(v: T, extent: T) -> usize {
    let scaled = (v * T::from_usize_lossy(FINEST_CELLS) / extent).floor();
    let idx = scaled.to_usize().unwrap_or(0);
    idx.min(FINEST_CELLS - 1)
}

/// (row, col) of a position at a binned level.
pub fn cell_of<T: Real>(p: &Point<T>, level: AbstractionLevel, world: &WorldConfig<T>) -> Option<(usize, usize)> {
    if level.get() == 1 {
        return None;
    }
    let shift = level.get() - 2;
    Some((fine_index(p.y, world.height) >> shift, fine_index(p.x, world.width) >> shift))
}

/// Bins agents and open tasks. Done tasks are left out.
pub fn build_heatmap<T: Real>(
    agents: &[Agent<T>],
    tasks: &[Task<T>],
    level: AbstractionLevel,
    world: &WorldConfig<T>,
) -> Result<HeatmapView<T>, HeatmapError> {
    for a in agents {
        if !world.contains(&a.position) {
            return Err(HeatmapError::AgentOutOfBounds(a.id));
        }
    }
    let open: Vec<&Task<T>> = tasks.iter().filter(|t| t.is_open()).collect();
    for t in &open {
        if !world.contains(&t.position) {
            return Err(HeatmapError::TaskOutOfBounds(t.id));
        }
    }
    let (rows, cols) = match grid_dimensions(level, world) {
        GridDims::Individual => {
            return Ok(HeatmapView::Individual {
                agents: agents.iter().map(|a| Marker { id: a.id, position: a.position }).collect(),
                tasks: open.iter().map(|t| Marker { id: t.id, position: t.position }).collect(),
            })
        }
        GridDims::Binned { rows, cols } => (rows, cols),
    };
    let mut cells: Vec<Cell> = (0..rows * cols)
        .map(|i| Cell { row: i / cols, col: i % cols, ..Cell::default() })
        .collect();
    for a in agents {
        let (r, c) = cell_of(&a.position, level, world).expect("binned level");
        let cell = &mut cells[r * cols + c];
        cell.agent_count += 1;
        cell.agent_ids.push(a.id);
    }
    for t in open {
        let (r, c) = cell_of(&t.position, level, world).expect("binned level");
        let cell = &mut cells[r * cols + c];
        cell.task_count += 1;
        cell.task_ids.push(t.id);
    }
    Ok(HeatmapView::Grid(HeatmapGrid { level, rows, cols, cells }))
}

impl HeatmapGrid {
    pub fn cell(&self, row: usize, col: usize) -> Result<&Cell, HeatmapError> {
        if row >= self.rows || col >= self.cols {
            return Err(HeatmapError::CellOutOfRange { row, col, rows: self.rows, cols: self.cols });
        }
        Ok(&self.cells[row * self.cols + col])
    }

    pub fn max_agent_count(&self) -> usize {
        self.cells.iter().map(|c| c.agent_count).max().unwrap_or(0)
    }

    pub fn max_task_count(&self) -> usize {
        self.cells.iter().map(|c| c.task_count).max().unwrap_or(0)
    }

    /// Per-frame normalised (agent, task) intensities in [0, 1].
    pub fn intensity(&self, row: usize, col: usize) -> Result<(f64, f64), HeatmapError> {
        let cell = self.cell(row, col)?;
        let norm = |v: usize, max: usize| if max == 0 { 0.0 } else { v as f64 / max as f64 };
        Ok((norm(cell.agent_count, self.max_agent_count()), norm(cell.task_count, self.max_task_count())))
    }
}

/// Members of one cell, as (agent ids, task ids).
pub fn cell_members(grid: &HeatmapGrid, row: usize, col: usize) -> Result<(Vec<u32>, Vec<u32>), HeatmapError> {
    let cell = grid.cell(row, col)?;
    Ok((cell.agent_ids.clone(), cell.task_ids.clone()))
}

/// Unions the agents of `agent_cells` and the tasks of `task_cells`,
/// sorted and deduplicated, ready for a cluster assignment.
pub fn selection_members(
    grid: &HeatmapGrid,
    agent_cells: &[(usize, usize)],
    task_cells: &[(usize, usize)],
) -> Result<(Vec<u32>, Vec<u32>), HeatmapError> {
    let mut agents = Vec::new();
    for &(r, c) in agent_cells {
        agents.extend(cell_members(grid, r, c)?.0);
    }
    let mut tasks = Vec::new();
    for &(r, c) in task_cells {
        tasks.extend(cell_members(grid, r, c)?.1);
    }
    agents.sort_unstable();
    agents.dedup();
    tasks.sort_unstable();
    tasks.dedup();
    Ok((agents, tasks))
}
