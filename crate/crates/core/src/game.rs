//! Time-expanded action spaces on a graph, interdiction, and normal-form
//! utility assembly.

use std::collections::{BTreeSet, HashMap};

use itertools::Itertools;
use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::graph::{DirectedGameGraph, NodeId};
use crate::matrix::BimatrixGame;

/// Joint action lists larger than this are refused rather than enumerated.
pub const MAX_JOINT_ACTIONS: usize = 5_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResourceKind {
    Moving,
    Stationary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Player {
    Attacker,
    Defender,
}

/// Resource positions, one row per resource and one column per game state.
/// Stationary rows are constant.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ActionMatrix {
    positions: Vec<Vec<NodeId>>,
    kinds: Vec<ResourceKind>,
}

impl ActionMatrix {
    pub fn new(positions: Vec<Vec<NodeId>>, kinds: Vec<ResourceKind>) -> Result<Self> {
        if positions.is_empty() || positions.len() != kinds.len() {
            return Err(invalid("action matrix needs one kind per nonempty row"));
        }
        let t = positions[0].len();
        if t == 0 || positions.iter().any(|r| r.len() != t) {
            return Err(invalid("action matrix rows must share a positive length"));
        }
        for (row, kind) in positions.iter().zip(&kinds) {
            if *kind == ResourceKind::Stationary && row.iter().any(|v| *v != row[0]) {
                return Err(invalid("stationary resource changes position"));
            }
        }
        Ok(ActionMatrix { positions, kinds })
    }

    pub fn stationary(node: NodeId, t: usize) -> Self {
        ActionMatrix {
            positions: vec![vec![node; t]],
            kinds: vec![ResourceKind::Stationary],
        }
    }

    pub fn moving(path: Vec<NodeId>) -> Self {
        ActionMatrix {
            positions: vec![path],
            kinds: vec![ResourceKind::Moving],
        }
    }

    pub fn positions(&self) -> &[Vec<NodeId>] {
        &self.positions
    }

    pub fn kinds(&self) -> &[ResourceKind] {
        &self.kinds
    }

    pub fn num_resources(&self) -> usize {
        self.positions.len()
    }

    pub fn num_timesteps(&self) -> usize {
        self.positions[0].len()
    }

    /// Checks every move of every row is an edge or a wait.
    pub fn validate_moves(&self, graph: &DirectedGameGraph) -> Result<()> {
        for row in &self.positions {
            for v in row {
                graph.index_of(*v)?;
            }
            if let Some((u, v)) = row.iter().tuple_windows().find(|(u, v)| u != v && !graph.has_edge(**u, **v)) {
                return Err(invalid(format!("move {u} -> {v} is not an edge")));
            }
        }
        Ok(())
    }

    /// Number of transitions between distinct nodes, summed over rows.
    pub fn moves(&self) -> usize {
        self.positions
            .iter()
            .map(|r| r.iter().tuple_windows().filter(|(u, v)| u != v).count())
            .sum()
    }
}

/// A target and its four payoffs. `value` is the zero-sum worth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetSpec {
    pub node_id: NodeId,
    pub value: f64,
    pub u_d_uncovered: f64,
    pub u_d_covered: f64,
    pub u_a_covered: f64,
    pub u_a_uncovered: f64,
}

impl TargetSpec {
    /// Zero-sum target: the attacker wins `value` when uncovered, nothing otherwise.
    pub fn zero_sum(node_id: NodeId, value: f64) -> Self {
        TargetSpec {
            node_id,
            value,
            u_d_uncovered: -value,
            u_d_covered: 0.0,
            u_a_covered: 0.0,
            u_a_uncovered: value,
        }
    }

    pub fn general(node_id: NodeId, u_d_uncovered: f64, u_d_covered: f64, u_a_covered: f64, u_a_uncovered: f64) -> Self {
        TargetSpec {
            node_id,
            value: u_a_uncovered,
            u_d_uncovered,
            u_d_covered,
            u_a_covered,
            u_a_uncovered,
        }
    }

    /// Security-game ordering of covered and uncovered payoffs.
    pub fn is_security_ordered(&self) -> bool {
        self.u_d_covered >= self.u_d_uncovered && self.u_a_uncovered >= self.u_a_covered
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterdictionProtocol {
    pub capture_radius: f64,
    pub defense_time_threshold: u32,
}

impl InterdictionProtocol {
    pub fn new(capture_radius: f64, defense_time_threshold: u32) -> Result<Self> {
        let p = InterdictionProtocol { capture_radius, defense_time_threshold };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.capture_radius >= 0.0) || self.defense_time_threshold < 1 {
            return Err(invalid("capture radius must be >= 0 and threshold >= 1"));
        }
        Ok(())
    }
}

impl Default for InterdictionProtocol {
    fn default() -> Self {
        InterdictionProtocol { capture_radius: 0.0, defense_time_threshold: 1 }
    }
}

/// Resource counts and per-resource start/end sets for one player. Sets are
/// indexed moving resources first, then stationary ones; an empty list, or
/// an empty set, means every node.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PlayerSetup {
    pub moving: usize,
    pub stationary: usize,
    #[serde(default)]
    pub starts: Vec<BTreeSet<NodeId>>,
    #[serde(default)]
    pub ends: Vec<BTreeSet<NodeId>>,
}

impl PlayerSetup {
    pub fn total(&self) -> usize {
        self.moving + self.stationary
    }

    fn sets(&self, which: &[BTreeSet<NodeId>], name: &str) -> Result<Vec<BTreeSet<NodeId>>> {
        match which.len() {
            0 => Ok(vec![BTreeSet::new(); self.total()]),
            n if n == self.total() => Ok(which.to_vec()),
            n => Err(invalid(format!(
                "{n} {name} sets given for {} resources",
                self.total()
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameConfig {
    pub num_timesteps: usize,
    pub attacker: PlayerSetup,
    pub defender: PlayerSetup,
    pub allow_wait: bool,
    pub force_return: bool,
    #[serde(default)]
    pub defender_step_cost: f64,
}

impl GameConfig {
    pub fn validate(&self, graph: &DirectedGameGraph) -> Result<()> {
        if self.num_timesteps < 1 {
            return Err(invalid("num_timesteps must be >= 1"));
        }
        if !(self.defender_step_cost >= 0.0) {
            return Err(invalid("defender step cost must be >= 0"));
        }
        for setup in [&self.attacker, &self.defender] {
            for v in setup.starts.iter().chain(&setup.ends).flatten() {
                graph.index_of(*v)?;
            }
        }
        Ok(())
    }

    pub fn setup(&self, player: Player) -> &PlayerSetup {
        match player {
            Player::Attacker => &self.attacker,
            Player::Defender => &self.defender,
        }
    }
}

fn or_all(graph: &DirectedGameGraph, set: &BTreeSet<NodeId>) -> Result<BTreeSet<NodeId>> {
    if set.is_empty() {
        return Ok(graph.node_ids().collect());
    }
    for v in set {
        graph.index_of(*v)?;
    }
    Ok(set.clone())
}

/// Every node sequence of length `t` that starts in `starts`, moves along
/// edges (waiting when allowed or when the node has no out-neighbour), and
/// ends in `ends`, or back at its own origin under `force_return`. Empty
/// sets mean every node.
pub fn generate_paths(
    graph: &DirectedGameGraph,
    starts: &BTreeSet<NodeId>,
    ends: &BTreeSet<NodeId>,
    t: usize,
    allow_wait: bool,
    force_return: bool,
) -> Result<BTreeSet<Vec<NodeId>>> {
    if t < 1 {
        return Err(invalid("path length T must be >= 1"));
    }
    let starts = or_all(graph, starts)?;
    let ends = or_all(graph, ends)?;
    let mut out = BTreeSet::new();
    let mut path = Vec::with_capacity(t);
    for &s in &starts {
        path.clear();
        path.push(s);
        let goal = Goal {
            graph,
            ends: &ends,
            origin: s,
            force_return,
        };
        extend(&goal, &mut path, t, allow_wait, &mut out);
    }
    Ok(out)
}

struct Goal<'a> {
    graph: &'a DirectedGameGraph,
    ends: &'a BTreeSet<NodeId>,
    origin: NodeId,
    force_return: bool,
}

impl Goal<'_> {
    fn accepts(&self, v: NodeId) -> bool {
        if self.force_return {
            v == self.origin
        } else {
            self.ends.contains(&v)
        }
    }

    /// Necessary condition for finishing from `v` within `remaining` moves.
    fn reachable(&self, v: NodeId, remaining: usize) -> bool {
        let within = |w: NodeId| self.graph.hop_distance(v, w).is_some_and(|d| d as usize <= remaining);
        if self.force_return {
            within(self.origin)
        } else {
            self.ends.iter().any(|&w| within(w))
        }
    }
}

fn extend(goal: &Goal<'_>, path: &mut Vec<NodeId>, t: usize, allow_wait: bool, out: &mut BTreeSet<Vec<NodeId>>) {
    let v = *path.last().expect("path is nonempty");
    if path.len() == t {
        if goal.accepts(v) {
            out.insert(path.clone());
        }
        return;
    }
    if !goal.reachable(v, t - path.len()) {
        return;
    }
    let neighbors = goal.graph.neighbors(v);
    let wait = (allow_wait || neighbors.is_empty()) && !neighbors.contains(&v);
    for &w in neighbors.iter().chain(wait.then_some(&v)) {
        path.push(w);
        extend(goal, path, t, allow_wait, out);
        path.pop();
    }
}

/// All joint actions of `player`. Moving resources follow paths, stationary
/// defenders hold a start node, and stationary attackers pick target nodes as
/// an unordered multiset. Joint actions are the product over resources.
pub fn generate_player_actions(
    graph: &DirectedGameGraph,
    config: &GameConfig,
    targets: &[TargetSpec],
    player: Player,
) -> Result<Vec<ActionMatrix>> {
    config.validate(graph)?;
    let setup = config.setup(player);
    if setup.total() == 0 {
        return Err(invalid(format!("{player:?} has no resources")));
    }
    let t = config.num_timesteps;
    let starts = setup.sets(&setup.starts, "start")?;
    let ends = setup.sets(&setup.ends, "end")?;

    let mut kinds = Vec::with_capacity(setup.total());
    let mut options: Vec<Vec<Vec<NodeId>>> = Vec::with_capacity(setup.total());
    for r in 0..setup.moving {
        let paths = generate_paths(graph, &starts[r], &ends[r], t, config.allow_wait, config.force_return)?;
        if paths.is_empty() {
            return Err(Error::NoFeasiblePath(format!("{player:?} resource {r} has no valid path")));
        }
        kinds.push(ResourceKind::Moving);
        options.push(paths.into_iter().collect());
    }
    for r in setup.moving..setup.total() {
        let nodes: Vec<NodeId> = match player {
            Player::Attacker => {
                let set: BTreeSet<NodeId> = targets.iter().map(|x| x.node_id).collect();
                if set.is_empty() {
                    return Err(invalid("stationary attackers need at least one target"));
                }
                set.into_iter().collect()
            }
            Player::Defender => or_all(graph, &starts[r])?.into_iter().collect(),
        };
        kinds.push(ResourceKind::Stationary);
        options.push(nodes.into_iter().map(|v| vec![v; t]).collect());
    }

    let count = options.iter().try_fold(1usize, |acc, o| acc.checked_mul(o.len()));
    if count.map_or(true, |c| c > MAX_JOINT_ACTIONS) {
        return Err(Error::SizeCap(format!("{player:?} joint actions exceed {MAX_JOINT_ACTIONS}")));
    }

    let stationary_attackers = match player {
        Player::Attacker => setup.moving..setup.total(),
        Player::Defender => 0..0,
    };
    let actions = options
        .iter()
        .map(|o| 0..o.len())
        .multi_cartesian_product()
        .filter(|idx| {
            idx[stationary_attackers.clone()]
                .iter()
                .tuple_windows()
                .all(|(a, b)| a <= b)
        })
        .map(|idx| ActionMatrix {
            positions: idx.iter().zip(&options).map(|(&i, o)| o[i].clone()).collect(),
            kinds: kinds.clone(),
        })
        .collect();
    Ok(actions)
}

/// Lookup from node to target, rejecting targets off the graph and nodes
/// carrying two targets.
#[derive(Debug, Clone)]
pub struct TargetIndex<'a> {
    targets: &'a [TargetSpec],
    by_node: HashMap<NodeId, usize>,
}

impl<'a> TargetIndex<'a> {
    pub fn new(targets: &'a [TargetSpec], graph: &DirectedGameGraph) -> Result<Self> {
        let mut by_node = HashMap::with_capacity(targets.len());
        for (i, t) in targets.iter().enumerate() {
            graph.index_of(t.node_id)?;
            if by_node.insert(t.node_id, i).is_some() {
                return Err(invalid(format!("two targets on node {}", t.node_id)));
            }
        }
        Ok(TargetIndex { targets, by_node })
    }

    pub fn get(&self, v: NodeId) -> Option<&'a TargetSpec> {
        self.by_node.get(&v).map(|&i| &self.targets[i])
    }

    pub fn position(&self, v: NodeId) -> Option<usize> {
        self.by_node.get(&v).copied()
    }
}

/// Targets an attack succeeded on and targets whose attack was stopped.
/// A target in both sets counts as captured.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Outcome {
    pub captured: BTreeSet<NodeId>,
    pub interdicted: BTreeSet<NodeId>,
}

pub fn resolve(
    defender: &ActionMatrix,
    attacker: &ActionMatrix,
    index: &TargetIndex<'_>,
    protocol: &InterdictionProtocol,
    graph: &DirectedGameGraph,
) -> Result<Outcome> {
    let t = attacker.num_timesteps();
    if defender.num_timesteps() != t {
        return Err(invalid(format!(
            "defender has {} timesteps, attacker {t}",
            defender.num_timesteps()
        )));
    }
    let mut out = Outcome::default();
    for (row, kind) in attacker.positions.iter().zip(&attacker.kinds) {
        match kind {
            ResourceKind::Stationary => {
                let v = row[0];
                if index.get(v).is_none() {
                    continue;
                }
                let presence: usize = defender
                    .positions
                    .iter()
                    .map(|d| d.iter().filter(|&&w| w == v).count())
                    .sum();
                if presence >= protocol.defense_time_threshold as usize {
                    out.interdicted.insert(v);
                } else {
                    out.captured.insert(v);
                }
            }
            ResourceKind::Moving => {
                let caught = (0..t).any(|tau| {
                    defender
                        .positions
                        .iter()
                        .any(|d| graph.distance(d[tau], row[tau]) <= protocol.capture_radius)
                });
                let reached = row.iter().filter(|v| index.get(**v).is_some());
                if caught {
                    out.interdicted.extend(reached);
                } else {
                    out.captured.extend(reached);
                }
            }
        }
    }
    let captured = out.captured.clone();
    out.interdicted.retain(|v| !captured.contains(v));
    Ok(out)
}

/// Zero-sum utilities `(u_a, u_d)` with `u_d = -u_a`.
pub fn evaluate_actions(
    defender: &ActionMatrix,
    attacker: &ActionMatrix,
    targets: &[TargetSpec],
    protocol: &InterdictionProtocol,
    graph: &DirectedGameGraph,
) -> Result<(f64, f64)> {
    let index = TargetIndex::new(targets, graph)?;
    let o = resolve(defender, attacker, &index, protocol, graph)?;
    let u_a = zero_sum_value(&o, &index);
    Ok((u_a, -u_a))
}

fn zero_sum_value(o: &Outcome, index: &TargetIndex<'_>) -> f64 {
    o.captured.iter().filter_map(|v| index.get(*v)).map(|t| t.value).sum()
}

fn general_values(o: &Outcome, index: &TargetIndex<'_>, defender: &ActionMatrix, step_cost: f64) -> (f64, f64) {
    let (mut u_a, mut u_d) = (0.0, 0.0);
    for t in o.captured.iter().filter_map(|v| index.get(*v)) {
        u_a += t.u_a_uncovered;
        u_d += t.u_d_uncovered;
    }
    for t in o.interdicted.iter().filter_map(|v| index.get(*v)) {
        u_a += t.u_a_covered;
        u_d += t.u_d_covered;
    }
    (u_a, u_d - step_cost * defender.moves() as f64)
}

/// General-sum utilities `(u_a, u_d)`; the defender pays `step_cost` per
/// move between distinct nodes.
pub fn evaluate_actions_general(
    defender: &ActionMatrix,
    attacker: &ActionMatrix,
    targets: &[TargetSpec],
    protocol: &InterdictionProtocol,
    graph: &DirectedGameGraph,
    step_cost: f64,
) -> Result<(f64, f64)> {
    let index = TargetIndex::new(targets, graph)?;
    let o = resolve(defender, attacker, &index, protocol, graph)?;
    Ok(general_values(&o, &index, defender, step_cost))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UtilityMode {
    /// Defender matrix `-u_a`, divided by its largest absolute entry.
    ZeroSum,
    /// Raw `(u_d, u_a)`; each matrix is optionally divided by its own max.
    GeneralSum { step_cost: f64, normalize: bool },
}

/// Normal-form game with defender actions as rows. Cells are evaluated in
/// parallel; the output does not depend on scheduling.
pub fn build_utility_matrix(
    defender_actions: &[ActionMatrix],
    attacker_actions: &[ActionMatrix],
    targets: &[TargetSpec],
    protocol: &InterdictionProtocol,
    graph: &DirectedGameGraph,
    mode: UtilityMode,
) -> Result<BimatrixGame> {
    if defender_actions.is_empty() || attacker_actions.is_empty() {
        return Err(Error::EmptyMatrix);
    }
    protocol.validate()?;
    let index = TargetIndex::new(targets, graph)?;
    let m = attacker_actions.len();
    let cells: Vec<(f64, f64)> = defender_actions
        .par_iter()
        .flat_map_iter(|d| {
            attacker_actions.iter().map(|a| {
                let o = resolve(d, a, &index, protocol, graph)?;
                Ok(match mode {
                    UtilityMode::ZeroSum => {
                        let u = zero_sum_value(&o, &index);
                        (-u, u)
                    }
                    UtilityMode::GeneralSum { step_cost, .. } => {
                        let (u_a, u_d) = general_values(&o, &index, d, step_cost);
                        (u_d, u_a)
                    }
                })
            })
        })
        .collect::<Result<_>>()?;
    let n = defender_actions.len();
    let a = Array2::from_shape_fn((n, m), |(i, j)| cells[i * m + j].0);
    let b = Array2::from_shape_fn((n, m), |(i, j)| cells[i * m + j].1);
    match mode {
        UtilityMode::ZeroSum => {
            let mut g = BimatrixGame::zero_sum(a)?;
            g.normalize_zero_sum();
            Ok(g)
        }
        UtilityMode::GeneralSum { normalize, .. } => {
            let mut g = BimatrixGame::new(a, b)?;
            if normalize {
                for mat in [&mut g.a, &mut g.b] {
                    let s = crate::matrix::max_abs(mat);
                    if s > 0.0 {
                        mat.mapv_inplace(|v| v / s);
                    }
                }
                g.normalized = true;
            }
            Ok(g)
        }
    }
}
