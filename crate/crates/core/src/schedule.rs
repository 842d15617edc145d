//! Patrol schedules and the schedule-form security game.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use itertools::Itertools;
use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::game::{TargetSpec, MAX_JOINT_ACTIONS};
use crate::graph::{DirectedGameGraph, NodeId};
use crate::matrix::BimatrixGame;

/// Set of targets one resource protects on a single patrol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub targets: BTreeSet<NodeId>,
    pub movement_steps: usize,
    pub movement_cost: f64,
}

impl Schedule {
    pub fn idle() -> Self {
        Schedule {
            targets: BTreeSet::new(),
            movement_steps: 0,
            movement_cost: 0.0,
        }
    }

    pub fn is_idle(&self) -> bool {
        self.targets.is_empty()
    }
}

/// Closed patrol from the home base. `cost` counts edges plus the extra
/// dwell timesteps; `steps` counts edges only.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tour {
    pub path: Vec<NodeId>,
    pub cost: usize,
    pub steps: usize,
}

/// Whether a lone target at hop distance `p` fits in `horizon`.
pub fn simple_condition(horizon: usize, p: usize, delta: usize) -> bool {
    horizon + 1 >= 2 * p + delta
}

/// Singleton schedules for the targets whose out-and-back tour with
/// `delta` timesteps on site fits in `horizon` moves.
pub fn simple_schedules(
    graph: &DirectedGameGraph,
    home: NodeId,
    targets: &[NodeId],
    horizon: usize,
    delta: usize,
    step_cost: f64,
) -> Result<Vec<Schedule>> {
    graph.index_of(home)?;
    check_delta(delta)?;
    let mut out = Vec::new();
    for &t in targets.iter().collect::<BTreeSet<_>>() {
        let (Some(go), Some(back)) = (graph.hop_distance(home, t), graph.hop_distance(t, home)) else {
            continue;
        };
        let (go, back) = (go as usize, back as usize);
        // Out and back legs coincide on symmetric graphs.
        let fits = if go == back {
            simple_condition(horizon, go, delta)
        } else {
            go + back + delta - 1 <= horizon
        };
        if fits {
            out.push(Schedule {
                targets: BTreeSet::from([t]),
                movement_steps: go + back,
                movement_cost: step_cost * (go + back) as f64,
            });
        }
    }
    Ok(out)
}

fn check_delta(delta: usize) -> Result<()> {
    if delta < 1 {
        return Err(invalid("defense time threshold must be >= 1"));
    }
    Ok(())
}

/// Cheapest closed tour from `home` through every node of `targets`,
/// dwelling `delta - 1` extra timesteps at each. Among optimal visiting
/// orders the lexicographically smallest is returned. `None` when some
/// target cannot be reached and left.
pub fn get_full_path(
    graph: &DirectedGameGraph,
    home: NodeId,
    targets: &BTreeSet<NodeId>,
    delta: usize,
) -> Option<Tour> {
    if delta < 1 || !graph.contains(home) {
        return None;
    }
    let order = best_order(graph, home, targets)?;
    let mut path = vec![home];
    let mut cur = home;
    for &t in &order {
        let leg = graph.shortest_path(cur, t)?;
        path.extend_from_slice(&leg[1..]);
        path.extend(std::iter::repeat(t).take(delta - 1));
        cur = t;
    }
    let leg = graph.shortest_path(cur, home)?;
    path.extend_from_slice(&leg[1..]);
    let cost = path.len() - 1;
    let steps = cost - (delta - 1) * order.len();
    Some(Tour { path, cost, steps })
}

/// Visiting order minimising total hop length; dynamic programming over
/// subsets with a lexicographic reconstruction.
fn best_order(graph: &DirectedGameGraph, home: NodeId, targets: &BTreeSet<NodeId>) -> Option<Vec<NodeId>> {
    let ts: Vec<NodeId> = targets.iter().copied().collect();
    let k = ts.len();
    if k == 0 {
        return Some(Vec::new());
    }
    if k > 20 {
        return None;
    }
    let d = |u: NodeId, v: NodeId| graph.hop_distance(u, v).map(|x| x as u64);
    const INF: u64 = u64::MAX / 4;
    let full = (1usize << k) - 1;
    // rest[mask][i]: cheapest way to visit the targets outside `mask` and
    // return home, starting at target i, given `mask` (which contains i) is done.
    let mut rest = vec![vec![INF; k]; 1 << k];
    for i in 0..k {
        rest[full][i] = d(ts[i], home).unwrap_or(INF);
    }
    for mask in (1..full).rev() {
        for i in (0..k).filter(|i| mask >> i & 1 == 1) {
            let mut best = INF;
            for j in (0..k).filter(|j| mask >> j & 1 == 0) {
                if let Some(step) = d(ts[i], ts[j]) {
                    best = best.min(step.saturating_add(rest[mask | 1 << j][j]));
                }
            }
            rest[mask][i] = best;
        }
    }
    let total = |j: usize| d(home, ts[j]).map_or(INF, |s| s.saturating_add(rest[1 << j][j]));
    let opt = (0..k).map(total).min()?;
    if opt >= INF {
        return None;
    }
    let mut order = Vec::with_capacity(k);
    let mut mask = 0usize;
    let mut cur: Option<usize> = None;
    let mut remaining = opt;
    for _ in 0..k {
        let next = (0..k)
            .filter(|j| mask >> j & 1 == 0)
            .find(|&j| {
                let step = match cur {
                    None => d(home, ts[j]),
                    Some(i) => d(ts[i], ts[j]),
                };
                step.is_some_and(|s| s.saturating_add(rest[mask | 1 << j][j]) == remaining)
            })?;
        let step = match cur {
            None => d(home, ts[next]),
            Some(i) => d(ts[i], ts[next]),
        }?;
        remaining -= step;
        mask |= 1 << next;
        cur = Some(next);
        order.push(ts[next]);
    }
    Some(order)
}

/// Every target subset whose tour from `home` fits in `horizon`, grown by
/// backtracking from the simple schedules. Supersets of a subset that does
/// not fit are never tried; tour cost is monotone under inclusion.
pub fn general_schedules(
    graph: &DirectedGameGraph,
    home: NodeId,
    targets: &[NodeId],
    horizon: usize,
    delta: usize,
    step_cost: f64,
) -> Result<Vec<Schedule>> {
    let seeds: Vec<NodeId> = simple_schedules(graph, home, targets, horizon, delta, step_cost)?
        .into_iter()
        .flat_map(|s| s.targets)
        .collect();
    let mut out = Vec::new();
    let mut current = BTreeSet::new();
    grow(graph, home, &seeds, 0, &mut current, horizon, delta, step_cost, &mut out);
    out.sort_by(|a, b| (a.targets.len(), &a.targets).cmp(&(b.targets.len(), &b.targets)));
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn grow(
    graph: &DirectedGameGraph,
    home: NodeId,
    seeds: &[NodeId],
    from: usize,
    current: &mut BTreeSet<NodeId>,
    horizon: usize,
    delta: usize,
    step_cost: f64,
    out: &mut Vec<Schedule>,
) {
    for i in from..seeds.len() {
        current.insert(seeds[i]);
        if let Some(tour) = get_full_path(graph, home, current, delta).filter(|t| t.cost <= horizon) {
            out.push(Schedule {
                targets: current.clone(),
                movement_steps: tour.steps,
                movement_cost: step_cost * tour.steps as f64,
            });
            grow(graph, home, seeds, i + 1, current, horizon, delta, step_cost, out);
        }
        current.remove(&seeds[i]);
    }
}

/// Merges schedule lists, keeping the cheapest schedule per target set.
pub fn dedup_min_cost(lists: impl IntoIterator<Item = Schedule>) -> Vec<Schedule> {
    let mut best: BTreeMap<(usize, Vec<NodeId>), Schedule> = BTreeMap::new();
    for s in lists {
        let key = (s.targets.len(), s.targets.iter().copied().collect());
        match best.get(&key) {
            Some(prev) if prev.movement_cost < s.movement_cost
                || (prev.movement_cost == s.movement_cost && prev.movement_steps <= s.movement_steps) => {}
            _ => {
                best.insert(key, s);
            }
        }
    }
    best.into_values().collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    Simple,
    General,
}

/// Schedule-form game: per-defender schedule lists over a fixed target list,
/// and the joint actions obtained by picking one schedule per defender.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleFormGame {
    pub targets: Vec<TargetSpec>,
    pub schedules: Vec<Vec<Schedule>>,
    pub joint_actions: Vec<Vec<usize>>,
    pub joint_costs: Vec<f64>,
}

impl ScheduleFormGame {
    /// Builds the per-defender lists from each defender's home bases. A
    /// defender with no feasible schedule gets a single idle one.
    pub fn build(
        graph: &DirectedGameGraph,
        targets: Vec<TargetSpec>,
        homes: &[Vec<NodeId>],
        horizon: usize,
        delta: usize,
        step_cost: f64,
        kind: ScheduleKind,
    ) -> Result<Self> {
        let nodes: Vec<NodeId> = targets.iter().map(|t| t.node_id).collect();
        let mut schedules = Vec::with_capacity(homes.len());
        for bases in homes {
            let mut all = Vec::new();
            for &h in bases {
                all.extend(match kind {
                    ScheduleKind::Simple => simple_schedules(graph, h, &nodes, horizon, delta, step_cost)?,
                    ScheduleKind::General => general_schedules(graph, h, &nodes, horizon, delta, step_cost)?,
                });
            }
            let mut list = dedup_min_cost(all);
            if list.is_empty() {
                list.push(Schedule::idle());
            }
            schedules.push(list);
        }
        Self::from_schedules(targets, schedules)
    }

    pub fn from_schedules(targets: Vec<TargetSpec>, schedules: Vec<Vec<Schedule>>) -> Result<Self> {
        if targets.is_empty() {
            return Err(invalid("schedule-form game needs targets"));
        }
        if schedules.is_empty() || schedules.iter().any(Vec::is_empty) {
            return Err(invalid("every defender needs at least one schedule"));
        }
        let known: BTreeSet<NodeId> = targets.iter().map(|t| t.node_id).collect();
        if known.len() != targets.len() {
            return Err(invalid("two targets share a node"));
        }
        if let Some(v) = schedules.iter().flatten().flat_map(|s| &s.targets).find(|v| !known.contains(v)) {
            return Err(invalid(format!("schedule covers non-target node {v}")));
        }
        let count = schedules.iter().try_fold(1usize, |acc, l| acc.checked_mul(l.len()));
        if count.map_or(true, |c| c > MAX_JOINT_ACTIONS) {
            return Err(Error::SizeCap("joint schedule combinations".into()));
        }
        let joint_actions: Vec<Vec<usize>> = schedules
            .iter()
            .map(|l| 0..l.len())
            .multi_cartesian_product()
            .collect();
        let joint_costs = joint_actions
            .iter()
            .map(|j| j.iter().zip(&schedules).map(|(&i, l)| l[i].movement_cost).sum())
            .collect();
        Ok(ScheduleFormGame {
            targets,
            schedules,
            joint_actions,
            joint_costs,
        })
    }

    pub fn num_defenders(&self) -> usize {
        self.schedules.len()
    }

    /// Rows: defender uncovered, defender covered, attacker covered,
    /// attacker uncovered.
    pub fn target_utility_matrix(&self) -> Array2<f64> {
        Array2::from_shape_fn((4, self.targets.len()), |(r, j)| {
            let t = &self.targets[j];
            [t.u_d_uncovered, t.u_d_covered, t.u_a_covered, t.u_a_uncovered][r]
        })
    }

    /// Every schedule covers at most one target.
    pub fn is_singleton(&self) -> bool {
        self.schedules.iter().flatten().all(|s| s.targets.len() <= 1)
    }

    fn target_positions(&self) -> HashMap<NodeId, usize> {
        self.targets.iter().enumerate().map(|(i, t)| (t.node_id, i)).collect()
    }

    /// Coverage indicator of each target under joint action `a`.
    pub fn covered(&self, a: usize) -> Vec<bool> {
        let pos = self.target_positions();
        let mut cov = vec![false; self.targets.len()];
        for (d, &s) in self.joint_actions[a].iter().enumerate() {
            for v in &self.schedules[d][s].targets {
                cov[pos[v]] = true;
            }
        }
        cov
    }
}

/// Normal form with joint schedule choices as rows and targets as columns.
/// Zero-sum mode pays the defender minus the attacker's payoff, normalised;
/// general-sum mode charges the joint movement cost to the defender.
pub fn schedule_game_matrix(sfg: &ScheduleFormGame, general_sum: bool) -> Result<BimatrixGame> {
    let n = sfg.joint_actions.len();
    let m = sfg.targets.len();
    let mut a = Array2::zeros((n, m));
    let mut b = Array2::zeros((n, m));
    for i in 0..n {
        let cov = sfg.covered(i);
        for (j, t) in sfg.targets.iter().enumerate() {
            let (u_d, u_a) = if cov[j] {
                (t.u_d_covered, t.u_a_covered)
            } else {
                (t.u_d_uncovered, t.u_a_uncovered)
            };
            a[[i, j]] = if general_sum { u_d - sfg.joint_costs[i] } else { -u_a };
            b[[i, j]] = u_a;
        }
    }
    let labels: Vec<String> = sfg
        .joint_actions
        .iter()
        .map(|j| j.iter().map(|s| s.to_string()).join("-"))
        .collect();
    let cols: Vec<String> = sfg.targets.iter().map(|t| t.node_id.to_string()).collect();
    let g = if general_sum {
        BimatrixGame::new(a, b)?
    } else {
        let mut g = BimatrixGame::zero_sum(a)?;
        g.normalize_zero_sum();
        g
    };
    g.with_labels(labels, cols)
}

/// Sets covered payoffs from uncovered ones: `u_a_covered = u_a_uncovered /
/// attacker_factor` and `u_d_covered = u_d_uncovered / defender_factor`.
pub fn scale_target_utilities(targets: &[TargetSpec], attacker_factor: f64, defender_factor: f64) -> Result<Vec<TargetSpec>> {
    if !(attacker_factor > 0.0 && defender_factor > 0.0) {
        return Err(invalid("penalty factors must be > 0"));
    }
    Ok(targets
        .iter()
        .map(|t| TargetSpec {
            u_a_covered: t.u_a_uncovered / attacker_factor,
            u_d_covered: t.u_d_uncovered / defender_factor,
            ..*t
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{DistanceMetric, Node};

    fn line(n: u32) -> DirectedGameGraph {
        let nodes = (0..n).map(|i| Node { id: NodeId(i), coord: None }).collect();
        DirectedGameGraph::undirected(nodes, (1..n).map(|i| (NodeId(i - 1), NodeId(i))), DistanceMetric::HopCount).unwrap()
    }

    fn ids(v: &[u32]) -> Vec<NodeId> {
        v.iter().map(|&i| NodeId(i)).collect()
    }

    #[test]
    fn simple_condition_boundary() {
        assert!(simple_condition(5, 2, 2));
        assert!(!simple_condition(4, 2, 2));
        assert!(simple_condition(1, 0, 1));
    }

    #[test]
    fn simple_schedules_apply_the_condition() {
        let g = line(3);
        let s = simple_schedules(&g, NodeId(0), &ids(&[1, 2]), 5, 2, 1.0).unwrap();
        assert_eq!(s.len(), 2);
        let s = simple_schedules(&g, NodeId(0), &ids(&[1, 2]), 4, 2, 1.0).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].movement_steps, 2);
        let s = simple_schedules(&g, NodeId(0), &ids(&[0]), 1, 1, 1.0).unwrap();
        assert_eq!(s.len(), 1);
    }

    #[test]
    fn full_path_costs() {
        let g = line(3);
        let one = get_full_path(&g, NodeId(0), &BTreeSet::from([NodeId(1)]), 1).unwrap();
        assert_eq!((one.cost, one.steps), (2, 2));
        let dwell = get_full_path(&g, NodeId(0), &BTreeSet::from([NodeId(1)]), 3).unwrap();
        assert_eq!(dwell.cost, 4);
        assert_eq!(dwell.path, ids(&[0, 1, 1, 1, 0]));
        let both = get_full_path(&g, NodeId(0), &BTreeSet::from([NodeId(1), NodeId(2)]), 1).unwrap();
        assert_eq!(both.path, ids(&[0, 1, 2, 1, 0]));
        assert_eq!(both.cost, 4);
    }

    #[test]
    fn disconnected_target_is_infeasible() {
        let nodes = (0..2).map(|i| Node { id: NodeId(i), coord: None }).collect();
        let g = DirectedGameGraph::new(nodes, [], DistanceMetric::HopCount).unwrap();
        assert!(get_full_path(&g, NodeId(0), &BTreeSet::from([NodeId(1)]), 1).is_none());
    }

    #[test]
    fn order_matches_permutation_search() {
        // Star around node 0 with a chord between 2 and 3.
        let nodes = (0..5).map(|i| Node { id: NodeId(i), coord: None }).collect();
        let e = [(0, 1), (0, 2), (0, 3), (0, 4), (2, 3)].map(|(a, b)| (NodeId(a), NodeId(b)));
        let g = DirectedGameGraph::undirected(nodes, e, DistanceMetric::HopCount).unwrap();
        let set: BTreeSet<NodeId> = ids(&[1, 2, 3, 4]).into_iter().collect();
        let tour = get_full_path(&g, NodeId(0), &set, 2).unwrap();
        let mut best: Option<(u32, Vec<NodeId>)> = None;
        for perm in set.iter().copied().permutations(set.len()) {
            let mut c = 0;
            let mut cur = NodeId(0);
            for &t in &perm {
                c += g.hop_distance(cur, t).unwrap();
                cur = t;
            }
            c += g.hop_distance(cur, NodeId(0)).unwrap();
            if best.as_ref().map_or(true, |(b, _)| c < *b) {
                best = Some((c, perm));
            }
        }
        let (c, perm) = best.unwrap();
        assert_eq!(tour.steps, c as usize);
        assert_eq!(tour.cost, c as usize + 4);
        let visited: Vec<NodeId> = tour.path.iter().copied().dedup().filter(|v| *v != NodeId(0)).collect();
        assert_eq!(visited, perm);
    }

    #[test]
    fn general_schedules_on_a_line() {
        let g = line(3);
        let s = general_schedules(&g, NodeId(0), &ids(&[1, 2]), 6, 1, 0.5).unwrap();
        let sets: Vec<Vec<NodeId>> = s.iter().map(|x| x.targets.iter().copied().collect()).collect();
        assert_eq!(sets, vec![ids(&[1]), ids(&[2]), ids(&[1, 2])]);
        assert_eq!(s[2].movement_cost, 2.0);
        let none = general_schedules(&g, NodeId(0), &ids(&[1, 2]), 1, 1, 0.0).unwrap();
        assert!(none.is_empty());
        let home = general_schedules(&g, NodeId(0), &ids(&[0, 2]), 1, 1, 0.0).unwrap();
        assert_eq!(home.len(), 1);
    }

    fn two_targets() -> Vec<TargetSpec> {
        vec![
            TargetSpec::general(NodeId(1), -4.0, 0.0, 0.0, 4.0),
            TargetSpec::general(NodeId(2), -2.0, 0.0, 0.0, 2.0),
        ]
    }

    fn singleton(v: u32) -> Schedule {
        Schedule {
            targets: BTreeSet::from([NodeId(v)]),
            movement_steps: 0,
            movement_cost: 0.0,
        }
    }

    #[test]
    fn schedule_matrix_fill() {
        let sfg = ScheduleFormGame::from_schedules(two_targets(), vec![vec![singleton(1), singleton(2)]]).unwrap();
        let g = schedule_game_matrix(&sfg, true).unwrap();
        assert_eq!(g.b, ndarray::array![[0.0, 2.0], [4.0, 0.0]]);
        assert_eq!(g.a, ndarray::array![[0.0, -2.0], [-4.0, 0.0]]);
        let z = schedule_game_matrix(&sfg, false).unwrap();
        assert_eq!(z.a, ndarray::array![[0.0, -0.5], [-1.0, 0.0]]);
    }

    #[test]
    fn overlapping_coverage_counts_once() {
        let sfg = ScheduleFormGame::from_schedules(two_targets(), vec![vec![singleton(1)], vec![singleton(1)]]).unwrap();
        let g = schedule_game_matrix(&sfg, true).unwrap();
        assert_eq!(g.b[[0, 0]], 0.0);
        assert_eq!(g.b[[0, 1]], 2.0);
    }

    #[test]
    fn idle_inserted_only_when_needed() {
        let g = line(3);
        let targets = vec![TargetSpec::zero_sum(NodeId(2), 1.0)];
        let sfg = ScheduleFormGame::build(&g, targets.clone(), &[ids(&[0]), ids(&[2])], 1, 1, 0.0, ScheduleKind::General).unwrap();
        assert!(sfg.schedules[0][0].is_idle());
        assert!(!sfg.schedules[1][0].is_idle());
        assert_eq!(sfg.joint_actions.len(), 1);
    }

    #[test]
    fn joint_count_is_a_product() {
        let sfg = ScheduleFormGame::from_schedules(
            two_targets(),
            vec![vec![singleton(1), singleton(2)], vec![singleton(1), singleton(2), Schedule::idle()]],
        )
        .unwrap();
        assert_eq!(sfg.joint_actions.len(), 6);
        assert_eq!(sfg.target_utility_matrix().row(3).to_vec(), vec![4.0, 2.0]);
    }

    #[test]
    fn scaling_covered_payoffs() {
        let t = [TargetSpec::general(NodeId(0), -5.0, 0.0, 0.0, 3.0)];
        let s = scale_target_utilities(&t, 3.0, 5.0).unwrap();
        assert_eq!((s[0].u_d_covered, s[0].u_a_covered), (-1.0, 1.0));
        let same = scale_target_utilities(&t, 1.0, 1.0).unwrap();
        assert_eq!((same[0].u_d_covered, same[0].u_a_covered), (-5.0, 3.0));
        assert!(scale_target_utilities(&t, 0.0, 1.0).is_err());
    }

    #[test]
    fn dedup_keeps_cheapest() {
        let mut a = singleton(1);
        a.movement_cost = 3.0;
        let b = singleton(1);
        let d = dedup_min_cost([a, b.clone()]);
        assert_eq!(d, vec![b]);
    }
}
