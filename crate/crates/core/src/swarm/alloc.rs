//! Balanced allocation of a task cluster onto an agent cluster.

use crate::scalar::{Point, Real};

/// Distributes `tasks` over `agents` so queue lengths differ by at most one.
///
/// The first task of every queue comes from a minimum-cost matching of
/// agents to tasks, so the total first-leg distance is optimal. The rest are
/// added greedily: repeatedly take the globally closest (agent tail,
/// unassigned task) pair, where an agent's tail is the position of its last
/// queued task. An agent may take another task while its queue is below
/// `n / m`, or at `n / m` while fewer than `n % m` agents have already
/// reached `n / m + 1`. Ties go to the lowest agent id, then the lowest task id.
///
/// Returns one queue per input agent, in input order.
pub fn greedy_balanced<T: Real>(
    agents: &[(u32, Point<T>)],
    tasks: &[(u32, Point<T>)],
) -> Vec<Vec<u32>> {
    let m = agents.len();
    let n = tasks.len();
    let mut queues: Vec<Vec<u32>> = vec![Vec::new(); m];
    if m == 0 || n == 0 {
        return queues;
    }
    let base = n / m;
    let extra = n % m;
    let mut tails: Vec<Point<T>> = agents.iter().map(|(_, p)| *p).collect();
    let mut taken = vec![false; n];

    for (ai, ti) in first_round(agents, tasks) {
        queues[ai].push(tasks[ti].0);
        taken[ti] = true;
        tails[ai] = tasks[ti].1;
    }
    let mut at_extra = queues.iter().filter(|q| q.len() > base).count();

    for _ in queues.iter().map(Vec::len).sum::<usize>()..n {
        let mut best: Option<(T, u32, u32, usize, usize)> = None;
        for (ai, (aid, _)) in agents.iter().enumerate() {
            let len = queues[ai].len();
            let eligible = len < base || (len == base && at_extra < extra);
            if !eligible {
                continue;
            }
            for (ti, (tid, tpos)) in tasks.iter().enumerate() {
                if taken[ti] {
                    continue;
                }
                let d = tails[ai].distance(tpos);
                let better = match &best {
                    None => true,
                    Some((bd, baid, btid, _, _)) => {
                        d < *bd || (d == *bd && (*aid, *tid) < (*baid, *btid))
                    }
                };
                if better {
                    best = Some((d, *aid, *tid, ai, ti));
                }
            }
        }
        let (_, _, tid, ai, ti) = best.expect("capacity always covers remaining tasks");
        if queues[ai].len() == base {
            at_extra += 1;
        }
        queues[ai].push(tid);
        taken[ti] = true;
        tails[ai] = tasks[ti].1;
    }
    queues
}

/// Minimum total distance matching of size `min(m, n)`, as
/// (agent index, task index) pairs. Both sides are visited in id order.
fn first_round<T: Real>(agents: &[(u32, Point<T>)], tasks: &[(u32, Point<T>)]) -> Vec<(usize, usize)> {
    let mut a_order: Vec<usize> = (0..agents.len()).collect();
    a_order.sort_by_key(|&i| agents[i].0);
    let mut t_order: Vec<usize> = (0..tasks.len()).collect();
    t_order.sort_by_key(|&i| tasks[i].0);
    let cost = |ai: usize, ti: usize| agents[a_order[ai]].1.distance(&tasks[t_order[ti]].1);
    if agents.len() <= tasks.len() {
        hungarian(agents.len(), tasks.len(), cost)
            .into_iter()
            .map(|(r, c)| (a_order[r], t_order[c]))
            .collect()
    } else {
        hungarian(tasks.len(), agents.len(), |r, c| cost(c, r))
            .into_iter()
            .map(|(r, c)| (a_order[c], t_order[r]))
            .collect()
    }
}

/// Shortest augmenting path assignment for a `rows × cols` cost matrix with
/// `rows <= cols`. Every row is matched; returns (row, col) pairs.
fn hungarian<T: Real>(rows: usize, cols: usize, cost: impl Fn(usize, usize) -> T) -> Vec<(usize, usize)> {
    // 1-based with column 0 as the virtual start
    let inf = T::infinity();
    let mut u = vec![T::zero(); rows + 1];
    let mut v = vec![T::zero(); cols + 1];
    let mut owner = vec![0usize; cols + 1];
    let mut way = vec![0usize; cols + 1];
    for i in 1..=rows {
        owner[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; cols + 1];
        let mut used = vec![false; cols + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=cols {
                if used[j] {
                    continue;
                }
                let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=cols {
                if used[j] {
                    u[owner[j]] = u[owner[j]] + delta;
                    v[j] = v[j] - delta;
                } else {
                    minv[j] = minv[j] - delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    (1..=cols).filter(|&j| owner[j] != 0).map(|j| (owner[j] - 1, j - 1)).collect()
}

/// Sum over agents of the distance from the agent to the head of its queue.
pub fn first_leg_distance<T: Real>(
    agents: &[(u32, Point<T>)],
    tasks: &[(u32, Point<T>)],
    queues: &[Vec<u32>],
) -> T {
    agents
        .iter()
        .zip(queues)
        .filter_map(|((_, apos), q)| {
            let head = q.first()?;
            let tpos = tasks.iter().find(|(id, _)| id == head)?.1;
            Some(apos.distance(&tpos))
        })
        .sum()
}
