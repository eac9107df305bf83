use std::collections::BTreeSet;

use neuroswarm_core::heatmap::{build_heatmap, cell_of, cell_members, AbstractionLevel, HeatmapGrid, HeatmapView};
use neuroswarm_core::scalar::Point;
use neuroswarm_core::swarm::{Agent, AgentStatus, Task, TaskStatus, WorldConfig};
use proptest::prelude::*;

fn agents(points: &[(f64, f64)]) -> Vec<Agent<f64>> {
    points
        .iter()
        .enumerate()
        .map(|(i, (x, y))| Agent {
            id: i as u32,
            position: Point::new(*x, *y),
            status: AgentStatus::Idle,
            assignment_queue: Default::default(),
        })
        .collect()
}

fn tasks(points: &[(f64, f64)]) -> Vec<Task<f64>> {
    points
        .iter()
        .enumerate()
        .map(|(i, (x, y))| Task { id: i as u32, position: Point::new(*x, *y), work_remaining: 5.0, status: TaskStatus::Open })
        .collect()
}

fn grid(view: HeatmapView<f64>) -> HeatmapGrid {
    view.grid().cloned().expect("binned level")
}

fn level(l: u8) -> AbstractionLevel {
    AbstractionLevel::new(l).unwrap()
}

/// Mixes interior points with points placed exactly on cell boundaries and the world edge.
fn coordinate() -> impl Strategy<Value = f64> {
    prop_oneof![
        3 => 0.0..=100.0f64,
        1 => (0u32..=32).prop_map(|k| k as f64 * 100.0 / 32.0),
    ]
}

fn entity_set() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((coordinate(), coordinate()), 0..60)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn cells_partition_entities(a in entity_set(), t in entity_set()) {
        let world = WorldConfig::<f64>::default();
        let (ag, ts) = (agents(&a), tasks(&t));
        for l in 2..=5 {
            let g = grid(build_heatmap(&ag, &ts, level(l), &world).unwrap());
            let mut seen_a = Vec::new();
            let mut seen_t = Vec::new();
            for r in 0..g.rows {
                for c in 0..g.cols {
                    let (ca, ct) = cell_members(&g, r, c).unwrap();
                    seen_a.extend(ca);
                    seen_t.extend(ct);
                }
            }
            seen_a.sort_unstable();
            seen_t.sort_unstable();
            prop_assert_eq!(seen_a, (0..a.len() as u32).collect::<Vec<_>>());
            prop_assert_eq!(seen_t, (0..t.len() as u32).collect::<Vec<_>>());
        }
        match build_heatmap(&ag, &ts, level(1), &world).unwrap() {
            HeatmapView::Individual { agents: ma, tasks: mt } => {
                prop_assert_eq!(ma.len(), a.len());
                prop_assert_eq!(mt.len(), t.len());
            }
            HeatmapView::Grid(_) => prop_assert!(false, "level 1 must be individual"),
        }
    }

    #[test]
    fn coarse_cells_are_unions_of_finer_cells(a in entity_set(), t in entity_set()) {
        let world = WorldConfig::<f64>::default();
        let (ag, ts) = (agents(&a), tasks(&t));
        for l in 3..=5 {
            let fine = grid(build_heatmap(&ag, &ts, level(l - 1), &world).unwrap());
            let coarse = grid(build_heatmap(&ag, &ts, level(l), &world).unwrap());
            prop_assert_eq!(fine.rows, coarse.rows * 2);
            for r in 0..coarse.rows {
                for c in 0..coarse.cols {
                    let (ca, ct) = cell_members(&coarse, r, c).unwrap();
                    let mut ua = BTreeSet::new();
                    let mut ut = BTreeSet::new();
                    for dr in 0..2 {
                        for dc in 0..2 {
                            let (fa, ft) = cell_members(&fine, 2 * r + dr, 2 * c + dc).unwrap();
                            ua.extend(fa);
                            ut.extend(ft);
                        }
                    }
                    prop_assert_eq!(ca.into_iter().collect::<BTreeSet<_>>(), ua);
                    prop_assert_eq!(ct.into_iter().collect::<BTreeSet<_>>(), ut);
                }
            }
        }
    }
}

#[test]
fn boundary_points_go_to_higher_cell() {
    let world = WorldConfig::<f64>::default();
    // x = 25 is the boundary between columns 7 and 8 at level 2 and between 0 and 1 at level 5
    let p = Point::new(25.0, 0.0);
    assert_eq!(cell_of(&p, level(2), &world), Some((0, 8)));
    assert_eq!(cell_of(&p, level(5), &world), Some((0, 1)));
    let edge = Point::new(100.0, 100.0);
    assert_eq!(cell_of(&edge, level(2), &world), Some((31, 31)));
    assert_eq!(cell_of(&edge, level(5), &world), Some((3, 3)));
}

#[test]
fn done_tasks_are_not_binned() {
    let world = WorldConfig::<f64>::default();
    let mut ts = tasks(&[(10.0, 10.0), (10.0, 10.0)]);
    ts[1].status = TaskStatus::Done;
    let g = grid(build_heatmap(&[], &ts, level(4), &world).unwrap());
    assert_eq!(g.max_task_count(), 1);
}
