//! Exact best responses for graph games with stationary attackers and for
//! schedule-form games, and their double-oracle wrappers.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use sgkit_lp::{solve_mip, LinearProgram, LpOutcome, MipProgram, Relation, Sense};

use crate::error::{invalid, Error, Result};
use crate::game::{generate_player_actions, ActionMatrix, GameConfig, InterdictionProtocol, Player, ResourceKind, TargetSpec};
use crate::graph::{DirectedGameGraph, NodeId};
use crate::schedule::ScheduleFormGame;
use crate::solvers::zero_sum::{double_oracle, DoOutcome, OracleGame};
use crate::strategy::MixedStrategy;

/// Action-space size up to which best responses enumerate instead of
/// solving a program.
pub const ENUMERATION_LIMIT: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BrMethod {
    #[default]
    Auto,
    Mip,
    Enumerate,
}

/// Number of valid paths, saturating; avoids materialising huge path sets.
pub fn count_paths(
    graph: &DirectedGameGraph,
    starts: &BTreeSet<NodeId>,
    ends: &BTreeSet<NodeId>,
    t: usize,
    allow_wait: bool,
    force_return: bool,
) -> Result<u128> {
    if t < 1 {
        return Err(invalid("path length T must be >= 1"));
    }
    let all: Vec<NodeId> = graph.node_ids().collect();
    let starts: Vec<NodeId> = if starts.is_empty() { all.clone() } else { starts.iter().copied().collect() };
    let n = graph.len();
    let walk = |origin: &[NodeId]| -> Result<Vec<u128>> {
        let mut cur = vec![0u128; n];
        for s in origin {
            cur[graph.index_of(*s)?] += 1;
        }
        for _ in 1..t {
            let mut next = vec![0u128; n];
            for v in graph.node_ids() {
                let c = cur[graph.index_of(v)?];
                if c == 0 {
                    continue;
                }
                let nb = graph.neighbors(v);
                let wait = (allow_wait || nb.is_empty()) && !nb.contains(&v);
                for &w in nb.iter().chain(wait.then_some(&v)) {
                    let iw = graph.index_of(w)?;
                    next[iw] = next[iw].saturating_add(c);
                }
            }
            cur = next;
        }
        Ok(cur)
    };
    let mut total = 0u128;
    if force_return {
        for s in &starts {
            let counts = walk(std::slice::from_ref(s))?;
            total = total.saturating_add(counts[graph.index_of(*s)?]);
        }
    } else {
        let counts = walk(&starts)?;
        let ends: Vec<NodeId> = if ends.is_empty() { all } else { ends.iter().copied().collect() };
        for e in ends {
            total = total.saturating_add(counts[graph.index_of(e)?]);
        }
    }
    Ok(total)
}

/// Graph game with stationary attackers choosing `k` distinct targets and
/// defenders moving through the time-expanded graph. Payoffs are to the
/// defender: minus the value of every attacked target left uninterdicted.
pub struct GraphGameOracles<'a> {
    graph: &'a DirectedGameGraph,
    config: &'a GameConfig,
    targets: &'a [TargetSpec],
    protocol: InterdictionProtocol,
    k: usize,
    target_pos: HashMap<NodeId, usize>,
    enumerated: Option<Vec<ActionMatrix>>,
}

impl<'a> GraphGameOracles<'a> {
    pub fn new(
        graph: &'a DirectedGameGraph,
        config: &'a GameConfig,
        targets: &'a [TargetSpec],
        protocol: InterdictionProtocol,
        method: BrMethod,
    ) -> Result<Self> {
        config.validate(graph)?;
        protocol.validate()?;
        if config.attacker.moving > 0 || config.attacker.stationary == 0 {
            return Err(Error::Unsupported("oracles need stationary attackers only".into()));
        }
        let k = config.attacker.stationary;
        if k > targets.len() {
            return Err(invalid(format!("{k} attackers but {} targets", targets.len())));
        }
        let mut target_pos = HashMap::new();
        for (i, t) in targets.iter().enumerate() {
            graph.index_of(t.node_id)?;
            target_pos.insert(t.node_id, i);
        }
        let mut me = GraphGameOracles {
            graph,
            config,
            targets,
            protocol,
            k,
            target_pos,
            enumerated: None,
        };
        let use_enum = match method {
            BrMethod::Enumerate => true,
            BrMethod::Mip => false,
            BrMethod::Auto => me.defender_action_count()? <= ENUMERATION_LIMIT as u128,
        };
        if use_enum {
            me.enumerated = Some(generate_player_actions(graph, config, targets, Player::Defender)?);
            if me.enumerated.as_ref().is_some_and(Vec::is_empty) {
                return Err(Error::NoFeasiblePath("defender has no joint action".into()));
            }
        }
        Ok(me)
    }

    pub fn num_attackers(&self) -> usize {
        self.k
    }

    fn defender_sets(&self) -> (Vec<BTreeSet<NodeId>>, Vec<BTreeSet<NodeId>>) {
        let d = &self.config.defender;
        let pad = |v: &Vec<BTreeSet<NodeId>>| if v.is_empty() { vec![BTreeSet::new(); d.total()] } else { v.clone() };
        (pad(&d.starts), pad(&d.ends))
    }

    fn defender_action_count(&self) -> Result<u128> {
        let d = &self.config.defender;
        let (starts, ends) = self.defender_sets();
        if starts.len() != d.total() || ends.len() != d.total() {
            return Err(invalid("defender start/end sets do not match resource count"));
        }
        let mut total = 1u128;
        for r in 0..d.total() {
            let c = if r < d.moving {
                count_paths(self.graph, &starts[r], &ends[r], self.config.num_timesteps, self.config.allow_wait, self.config.force_return)?
            } else if starts[r].is_empty() {
                self.graph.len() as u128
            } else {
                starts[r].len() as u128
            };
            total = total.saturating_mul(c);
        }
        Ok(total)
    }

    /// Targets whose interdiction threshold `action` meets.
    pub fn interdicted(&self, action: &ActionMatrix) -> Vec<bool> {
        let mut presence = vec![0usize; self.targets.len()];
        for row in action.positions() {
            for v in row {
                if let Some(&i) = self.target_pos.get(v) {
                    presence[i] += 1;
                }
            }
        }
        presence
            .into_iter()
            .map(|p| p >= self.protocol.defense_time_threshold as usize)
            .collect()
    }

    /// Defender action maximising `sum_t weight_t * g_t`, with the objective.
    pub fn defender_br(&self, weights: &[f64]) -> Result<(ActionMatrix, f64)> {
        match &self.enumerated {
            Some(actions) => {
                let mut best: Option<(usize, f64)> = None;
                for (i, a) in actions.iter().enumerate() {
                    let g = self.interdicted(a);
                    let obj: f64 = weights.iter().zip(&g).filter(|(_, g)| **g).map(|(w, _)| w).sum();
                    if best.map_or(true, |(_, b)| obj > b) {
                        best = Some((i, obj));
                    }
                }
                let (i, obj) = best.ok_or_else(|| Error::NoFeasiblePath("no defender action".into()))?;
                Ok((actions[i].clone(), obj))
            }
            None => self.defender_br_mip(weights),
        }
    }

    /// Time-expanded program: one node per resource and timestep, moves
    /// along edges or waits, and `delta * g_t` at most the total presence
    /// at target `t`.
    fn defender_br_mip(&self, weights: &[f64]) -> Result<(ActionMatrix, f64)> {
        let g = self.graph;
        let cfg = self.config;
        let t_len = cfg.num_timesteps;
        let d = &cfg.defender;
        let (starts, ends) = self.defender_sets();
        let all: BTreeSet<NodeId> = g.node_ids().collect();

        let mut var_of: BTreeMap<(usize, NodeId, usize), usize> = BTreeMap::new();
        let mut stat_of: BTreeMap<(usize, NodeId), usize> = BTreeMap::new();
        let mut n_vars = 0usize;

        let near = |set: &BTreeSet<NodeId>, v: NodeId, budget: usize, to_set: bool| {
            set.iter().any(|&s| {
                let h = if to_set { g.hop_distance(v, s) } else { g.hop_distance(s, v) };
                h.is_some_and(|h| h as usize <= budget)
            })
        };
        for r in 0..d.moving {
            let s = if starts[r].is_empty() { &all } else { &starts[r] };
            let e = if cfg.force_return { s } else if ends[r].is_empty() { &all } else { &ends[r] };
            for tau in 0..t_len {
                for v in g.node_ids() {
                    if near(s, v, tau, false) && near(e, v, t_len - 1 - tau, true) {
                        var_of.insert((r, v, tau), n_vars);
                        n_vars += 1;
                    }
                }
            }
        }
        for r in d.moving..d.total() {
            let s = if starts[r].is_empty() { &all } else { &starts[r] };
            for &v in s {
                stat_of.insert((r, v), n_vars);
                n_vars += 1;
            }
        }
        let g_base = n_vars;
        let active: Vec<usize> = (0..self.targets.len()).filter(|&i| weights[i] > 0.0).collect();
        n_vars += active.len();

        let mut obj = vec![0.0; n_vars];
        for (k, &i) in active.iter().enumerate() {
            obj[g_base + k] = weights[i];
        }
        let mut lp = LinearProgram::new(Sense::Maximize, obj);
        for i in 0..n_vars {
            lp.set_bounds(i, 0.0, 1.0);
        }
        for r in 0..d.moving {
            for tau in 0..t_len {
                let terms: Vec<(usize, f64)> = g.node_ids().filter_map(|v| var_of.get(&(r, v, tau))).map(|&i| (i, 1.0)).collect();
                if terms.is_empty() {
                    return Err(Error::NoFeasiblePath(format!("defender resource {r} cannot be placed at step {tau}")));
                }
                lp.add_terms(terms, Relation::Eq, 1.0);
            }
            for tau in 0..t_len.saturating_sub(1) {
                for w in g.node_ids() {
                    let Some(&zw) = var_of.get(&(r, w, tau + 1)) else { continue };
                    let mut terms = vec![(zw, 1.0)];
                    for v in g.node_ids() {
                        let nb = g.neighbors(v);
                        let allowed = nb.contains(&w) || (v == w && (cfg.allow_wait || nb.is_empty()));
                        if allowed {
                            if let Some(&zv) = var_of.get(&(r, v, tau)) {
                                terms.push((zv, -1.0));
                            }
                        }
                    }
                    lp.add_terms(terms, Relation::Le, 0.0);
                }
            }
            if cfg.force_return && t_len > 1 {
                for v in g.node_ids() {
                    let mut terms = Vec::new();
                    if let Some(&a) = var_of.get(&(r, v, 0)) {
                        terms.push((a, 1.0));
                    }
                    if let Some(&b) = var_of.get(&(r, v, t_len - 1)) {
                        terms.push((b, -1.0));
                    }
                    if !terms.is_empty() {
                        lp.add_terms(terms, Relation::Eq, 0.0);
                    }
                }
            }
        }
        for r in d.moving..d.total() {
            let terms: Vec<(usize, f64)> = stat_of.iter().filter(|((rr, _), _)| *rr == r).map(|(_, &i)| (i, 1.0)).collect();
            lp.add_terms(terms, Relation::Eq, 1.0);
        }
        let delta = self.protocol.defense_time_threshold as f64;
        for (k, &i) in active.iter().enumerate() {
            let node = self.targets[i].node_id;
            let mut terms = vec![(g_base + k, delta)];
            for ((_, v, _), &z) in var_of.iter() {
                if *v == node {
                    terms.push((z, -1.0));
                }
            }
            for ((_, v), &s) in stat_of.iter() {
                if *v == node {
                    terms.push((s, -(t_len as f64)));
                }
            }
            lp.add_terms(terms, Relation::Le, 0.0);
        }
        let sol = match solve_mip(&MipProgram::new(lp, (0..n_vars).collect()))? {
            LpOutcome::Optimal(s) => s,
            LpOutcome::Infeasible => return Err(Error::NoFeasiblePath("no defender path satisfies the constraints".into())),
            LpOutcome::Unbounded => return Err(Error::SolverFailure("unbounded")),
        };

        let mut positions = Vec::with_capacity(d.total());
        let mut kinds = Vec::with_capacity(d.total());
        for r in 0..d.moving {
            let row = (0..t_len)
                .map(|tau| {
                    g.node_ids()
                        .find(|v| var_of.get(&(r, *v, tau)).is_some_and(|&i| sol.x[i] > 0.5))
                        .ok_or(Error::SolverFailure("fractional placement"))
                })
                .collect::<Result<Vec<_>>>()?;
            positions.push(row);
            kinds.push(ResourceKind::Moving);
        }
        for r in d.moving..d.total() {
            let v = stat_of
                .iter()
                .filter(|((rr, _), &i)| *rr == r && sol.x[i] > 0.5)
                .map(|((_, v), _)| *v)
                .min()
                .ok_or(Error::SolverFailure("fractional placement"))?;
            positions.push(vec![v; t_len]);
            kinds.push(ResourceKind::Stationary);
        }
        let action = ActionMatrix::new(positions, kinds)?;
        let g_vec = self.interdicted(&action);
        let obj = weights.iter().zip(&g_vec).filter(|(_, g)| **g).map(|(w, _)| w).sum();
        Ok((action, obj))
    }
}

/// The `k` targets with the largest `value_t * (1 - q_t)`, lower index first
/// on ties, returned in ascending order.
pub fn attacker_br_nfg(values: &[f64], interdiction: &[f64], k: usize) -> Result<Vec<usize>> {
    if k > values.len() || values.len() != interdiction.len() {
        return Err(invalid(format!("cannot pick {k} of {} targets", values.len())));
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    let score = |i: usize| values[i] * (1.0 - interdiction[i]);
    order.sort_by(|&i, &j| score(j).total_cmp(&score(i)).then(i.cmp(&j)));
    order.truncate(k);
    order.sort_unstable();
    Ok(order)
}

/// Defender best response against an attack distribution over targets
/// (`attack_prob[t]` = probability target `t` is attacked).
pub fn defender_br_nfg(oracles: &GraphGameOracles<'_>, attack_prob: &[f64]) -> Result<(ActionMatrix, f64)> {
    let w: Vec<f64> = attack_prob.iter().zip(oracles.targets).map(|(p, t)| p * t.value).collect();
    oracles.defender_br(&w)
}

impl OracleGame for GraphGameOracles<'_> {
    type Row = ActionMatrix;
    type Col = Vec<usize>;

    fn payoff(&self, r: &ActionMatrix, c: &Vec<usize>) -> Result<f64> {
        let g = self.interdicted(r);
        Ok(-c.iter().filter(|&&t| !g[t]).map(|&t| self.targets[t].value).sum::<f64>())
    }

    fn initial_row(&self) -> Result<ActionMatrix> {
        match &self.enumerated {
            Some(a) => Ok(a[0].clone()),
            None => Ok(self.defender_br(&vec![0.0; self.targets.len()])?.0),
        }
    }

    fn initial_col(&self) -> Result<Vec<usize>> {
        Ok((0..self.k).collect())
    }

    fn best_row(&self, cols: &[Vec<usize>], y: &MixedStrategy) -> Result<(ActionMatrix, f64)> {
        let mut p = vec![0.0; self.targets.len()];
        for (c, &pr) in cols.iter().zip(y.probs()) {
            for &t in c {
                p[t] += pr;
            }
        }
        let w: Vec<f64> = p.iter().zip(self.targets).map(|(p, t)| p * t.value).collect();
        let (a, obj) = self.defender_br(&w)?;
        Ok((a, obj - w.iter().sum::<f64>()))
    }

    fn best_col(&self, rows: &[ActionMatrix], x: &MixedStrategy) -> Result<(Vec<usize>, f64)> {
        let mut q = vec![0.0; self.targets.len()];
        for (r, &pr) in rows.iter().zip(x.probs()) {
            for (qt, g) in q.iter_mut().zip(self.interdicted(r)) {
                if g {
                    *qt += pr;
                }
            }
        }
        let values: Vec<f64> = self.targets.iter().map(|t| t.value).collect();
        let s = attacker_br_nfg(&values, &q, self.k)?;
        let v = -s.iter().map(|&t| values[t] * (1.0 - q[t])).sum::<f64>();
        Ok((s, v))
    }
}

/// Double oracle on a graph game; the value is the defender's raw payoff.
pub fn double_oracle_nfg(oracles: &GraphGameOracles<'_>, eps: f64) -> Result<DoOutcome<ActionMatrix, Vec<usize>>> {
    double_oracle(oracles, eps)
}

/// Zero-sum schedule-form game: the defender picks one schedule per
/// resource and receives minus the attacker's payoff at the attacked target.
pub struct ScheduleOracles<'a> {
    sfg: &'a ScheduleFormGame,
    method: BrMethod,
    covers: Vec<Vec<Vec<usize>>>,
}

impl<'a> ScheduleOracles<'a> {
    pub fn new(sfg: &'a ScheduleFormGame, method: BrMethod) -> Self {
        let pos: HashMap<NodeId, usize> = sfg.targets.iter().enumerate().map(|(i, t)| (t.node_id, i)).collect();
        let covers = sfg
            .schedules
            .iter()
            .map(|list| list.iter().map(|s| s.targets.iter().map(|v| pos[v]).collect()).collect())
            .collect();
        ScheduleOracles { sfg, method, covers }
    }

    fn coverage(&self, choice: &[usize]) -> Vec<bool> {
        let mut cov = vec![false; self.sfg.targets.len()];
        for (d, &s) in choice.iter().enumerate() {
            for &t in &self.covers[d][s] {
                cov[t] = true;
            }
        }
        cov
    }

    /// Scale that `schedule_game_matrix` divides zero-sum payoffs by.
    pub fn normalization(&self) -> f64 {
        let mut m = 0.0f64;
        for (i, t) in self.sfg.targets.iter().enumerate() {
            let can_cover = self.covers.iter().any(|l| l.iter().any(|s| s.contains(&i)));
            let can_miss = self.covers.iter().all(|l| l.iter().any(|s| !s.contains(&i)));
            if can_cover {
                m = m.max(t.u_a_covered.abs());
            }
            if can_miss {
                m = m.max(t.u_a_uncovered.abs());
            }
        }
        m
    }

    /// One schedule per resource maximising `sum_t weight_t * g_t`, where
    /// `g_t` is whether some chosen schedule covers `t`.
    pub fn defender_br(&self, weights: &[f64]) -> Result<(Vec<usize>, f64)> {
        let enumerate = match self.method {
            BrMethod::Enumerate => true,
            BrMethod::Mip => false,
            BrMethod::Auto => self.sfg.joint_actions.len() <= ENUMERATION_LIMIT,
        };
        if enumerate {
            let mut best: Option<(usize, f64)> = None;
            for (i, j) in self.sfg.joint_actions.iter().enumerate() {
                let obj: f64 = self.coverage(j).iter().zip(weights).filter(|(c, _)| **c).map(|(_, w)| w).sum();
                if best.map_or(true, |(_, b)| obj > b) {
                    best = Some((i, obj));
                }
            }
            let (i, obj) = best.ok_or(Error::EmptyMatrix)?;
            return Ok((self.sfg.joint_actions[i].clone(), obj));
        }
        let mut index = Vec::new();
        for (d, list) in self.covers.iter().enumerate() {
            for s in 0..list.len() {
                index.push((d, s));
            }
        }
        let nt = self.sfg.targets.len();
        let ns = index.len();
        let mut obj = vec![0.0; ns + nt];
        obj[ns..].copy_from_slice(weights);
        let mut lp = LinearProgram::new(Sense::Maximize, obj);
        for i in 0..ns + nt {
            lp.set_bounds(i, 0.0, 1.0);
        }
        for d in 0..self.covers.len() {
            let terms = index.iter().enumerate().filter(|(_, (dd, _))| *dd == d).map(|(i, _)| (i, 1.0)).collect();
            lp.add_terms(terms, Relation::Eq, 1.0);
        }
        for t in 0..nt {
            let mut terms = vec![(ns + t, 1.0)];
            for (i, &(d, s)) in index.iter().enumerate() {
                if self.covers[d][s].contains(&t) {
                    terms.push((i, -1.0));
                }
            }
            lp.add_terms(terms, Relation::Le, 0.0);
        }
        let sol = match solve_mip(&MipProgram::new(lp, (0..ns).collect()))? {
            LpOutcome::Optimal(s) => s,
            _ => return Err(Error::SolverFailure("schedule best response")),
        };
        let mut choice = vec![0; self.covers.len()];
        for (i, &(d, s)) in index.iter().enumerate() {
            if sol.x[i] > 0.5 {
                choice[d] = s;
            }
        }
        let val = self.coverage(&choice).iter().zip(weights).filter(|(c, _)| **c).map(|(_, w)| w).sum();
        Ok((choice, val))
    }

    /// Target with the highest expected attacker payoff under the per-target
    /// coverage of the defender mix, and that payoff.
    pub fn attacker_br(&self, rows: &[Vec<usize>], x: &MixedStrategy) -> (usize, f64) {
        let mut c = vec![0.0; self.sfg.targets.len()];
        for (r, &p) in rows.iter().zip(x.probs()) {
            for (ct, cov) in c.iter_mut().zip(self.coverage(r)) {
                if cov {
                    *ct += p;
                }
            }
        }
        let ev = |i: usize| {
            let t = &self.sfg.targets[i];
            c[i] * t.u_a_covered + (1.0 - c[i]) * t.u_a_uncovered
        };
        crate::solvers::zero_sum::argbest((0..c.len()).map(ev), |a, b| a > b)
    }
}

impl OracleGame for ScheduleOracles<'_> {
    type Row = Vec<usize>;
    type Col = usize;

    fn payoff(&self, r: &Vec<usize>, c: &usize) -> Result<f64> {
        let t = &self.sfg.targets[*c];
        Ok(-if self.coverage(r)[*c] { t.u_a_covered } else { t.u_a_uncovered })
    }

    fn initial_row(&self) -> Result<Vec<usize>> {
        Ok(vec![0; self.covers.len()])
    }

    fn initial_col(&self) -> Result<usize> {
        Ok(0)
    }

    fn best_row(&self, cols: &[usize], y: &MixedStrategy) -> Result<(Vec<usize>, f64)> {
        let mut p = vec![0.0; self.sfg.targets.len()];
        for (&c, &pr) in cols.iter().zip(y.probs()) {
            p[c] += pr;
        }
        let base: f64 = p.iter().zip(&self.sfg.targets).map(|(p, t)| -p * t.u_a_uncovered).sum();
        let w: Vec<f64> = p.iter().zip(&self.sfg.targets).map(|(p, t)| p * (t.u_a_uncovered - t.u_a_covered)).collect();
        let (choice, obj) = self.defender_br(&w)?;
        Ok((choice, base + obj))
    }

    fn best_col(&self, rows: &[Vec<usize>], x: &MixedStrategy) -> Result<(usize, f64)> {
        let (t, ev) = self.attacker_br(rows, x);
        Ok((t, -ev))
    }
}

/// Double oracle on a schedule-form game; the value is the defender's raw
/// payoff, before any normalisation.
pub fn double_oracle_sfg(oracles: &ScheduleOracles<'_>, eps: f64) -> Result<DoOutcome<Vec<usize>, usize>> {
    double_oracle(oracles, eps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{build_utility_matrix, generate_paths, PlayerSetup, UtilityMode};
    use crate::graph::{DistanceMetric, Node};
    use crate::matrix::max_abs;
    use crate::schedule::{schedule_game_matrix, Schedule, ScheduleKind};
    use crate::solvers::zero_sum::{nash_lp, DO_EPSILON};

    fn grid(r: u32, c: u32) -> DirectedGameGraph {
        let nodes = (0..r * c).map(|i| Node { id: NodeId(i), coord: None }).collect();
        let mut e = Vec::new();
        for i in 0..r {
            for j in 0..c {
                let v = i * c + j;
                if j + 1 < c {
                    e.push((NodeId(v), NodeId(v + 1)));
                }
                if i + 1 < r {
                    e.push((NodeId(v), NodeId(v + c)));
                }
            }
        }
        DirectedGameGraph::undirected(nodes, e, DistanceMetric::HopCount).unwrap()
    }

    fn cfg(t: usize, defenders: usize, attackers: usize, base: u32) -> GameConfig {
        GameConfig {
            num_timesteps: t,
            attacker: PlayerSetup { stationary: attackers, ..Default::default() },
            defender: PlayerSetup {
                moving: defenders,
                starts: vec![BTreeSet::from([NodeId(base)]); defenders],
                ends: vec![BTreeSet::new(); defenders],
                ..Default::default()
            },
            allow_wait: true,
            force_return: true,
            defender_step_cost: 0.0,
        }
    }

    #[test]
    fn path_counts_match_enumeration() {
        let g = grid(2, 3);
        for (wait, ret) in [(true, true), (true, false), (false, true), (false, false)] {
            for t in 1..5 {
                let s = BTreeSet::from([NodeId(0), NodeId(4)]);
                let e = BTreeSet::from([NodeId(2)]);
                let n = generate_paths(&g, &s, &e, t, wait, ret).unwrap().len() as u128;
                assert_eq!(count_paths(&g, &s, &e, t, wait, ret).unwrap(), n);
            }
        }
    }

    #[test]
    fn adjacent_target_is_covered() {
        let g = grid(1, 3);
        let targets = [TargetSpec::zero_sum(NodeId(1), 2.0)];
        let c = cfg(3, 1, 1, 0);
        for m in [BrMethod::Enumerate, BrMethod::Mip] {
            let o = GraphGameOracles::new(&g, &c, &targets, InterdictionProtocol::default(), m).unwrap();
            let (a, obj) = defender_br_nfg(&o, &[0.5]).unwrap();
            assert_eq!(obj, 1.0);
            assert!(o.interdicted(&a)[0]);
        }
    }

    #[test]
    fn unreachable_targets_give_zero() {
        let g = grid(1, 5);
        let targets = [TargetSpec::zero_sum(NodeId(4), 2.0)];
        let c = cfg(3, 1, 1, 0);
        for m in [BrMethod::Enumerate, BrMethod::Mip] {
            let o = GraphGameOracles::new(&g, &c, &targets, InterdictionProtocol::default(), m).unwrap();
            assert_eq!(defender_br_nfg(&o, &[1.0]).unwrap().1, 0.0);
        }
    }

    #[test]
    fn picks_the_heavier_target() {
        // Base in the middle of a line; only one side fits in three states.
        let g = grid(1, 5);
        let targets = [TargetSpec::zero_sum(NodeId(1), 1.0), TargetSpec::zero_sum(NodeId(3), 3.0)];
        let c = cfg(3, 1, 1, 2);
        for m in [BrMethod::Enumerate, BrMethod::Mip] {
            let o = GraphGameOracles::new(&g, &c, &targets, InterdictionProtocol::default(), m).unwrap();
            let (a, obj) = defender_br_nfg(&o, &[0.5, 0.5]).unwrap();
            assert_eq!(obj, 1.5);
            assert_eq!(o.interdicted(&a), vec![false, true]);
        }
    }

    #[test]
    fn mip_matches_enumeration_on_grids() {
        let g = grid(3, 3);
        let targets: Vec<_> = [(2, 1.0), (4, 2.0), (6, 1.5), (8, 3.0)]
            .iter()
            .map(|&(v, x)| TargetSpec::zero_sum(NodeId(v), x))
            .collect();
        for (delta, wait, ret, t) in [(1, true, true, 5), (2, true, true, 6), (1, false, false, 4), (2, true, false, 5)] {
            let mut c = cfg(t, 2, 1, 0);
            c.allow_wait = wait;
            c.force_return = ret;
            let p = InterdictionProtocol::new(0.0, delta).unwrap();
            let e = GraphGameOracles::new(&g, &c, &targets, p, BrMethod::Enumerate).unwrap();
            let m = GraphGameOracles::new(&g, &c, &targets, p, BrMethod::Mip).unwrap();
            for w in [[1.0, 1.0, 1.0, 1.0], [0.1, 2.0, 0.0, 0.7], [3.0, 0.0, 0.2, 0.1]] {
                let (ae, oe) = e.defender_br(&w).unwrap();
                let (am, om) = m.defender_br(&w).unwrap();
                assert!((oe - om).abs() < 1e-9, "{oe} vs {om}");
                am.validate_moves(&g).unwrap();
                assert!(e.interdicted(&ae).len() == 4);
            }
        }
    }

    #[test]
    fn attacker_top_k() {
        assert_eq!(attacker_br_nfg(&[5.0, 3.0, 2.0], &[0.5, 0.0, 0.0], 2).unwrap(), vec![0, 1]);
        assert_eq!(attacker_br_nfg(&[5.0, 3.0, 2.0], &[1.0, 1.0, 1.0], 2).unwrap(), vec![0, 1]);
        assert_eq!(attacker_br_nfg(&[1.0, 2.0], &[0.0, 0.0], 2).unwrap(), vec![0, 1]);
        assert!(attacker_br_nfg(&[1.0], &[0.0], 2).is_err());
    }

    #[test]
    fn graph_double_oracle_matches_full_matrix() {
        let g = grid(2, 3);
        let targets: Vec<_> = [(2, 1.0), (3, 2.0), (5, 1.5)]
            .iter()
            .map(|&(v, x)| TargetSpec::zero_sum(NodeId(v), x))
            .collect();
        let c = cfg(5, 1, 1, 0);
        let p = InterdictionProtocol::default();
        let defs = generate_player_actions(&g, &c, &targets, Player::Defender).unwrap();
        let atts = generate_player_actions(&g, &c, &targets, Player::Attacker).unwrap();
        let full = build_utility_matrix(&defs, &atts, &targets, &p, &g, UtilityMode::ZeroSum).unwrap();
        let raw_scale = 2.0;
        let nash = nash_lp(&full.a).unwrap().value * raw_scale;
        for m in [BrMethod::Enumerate, BrMethod::Mip] {
            let o = GraphGameOracles::new(&g, &c, &targets, p, m).unwrap();
            let d = double_oracle_nfg(&o, DO_EPSILON).unwrap();
            assert!((d.report.value - nash).abs() < 1e-6, "{} vs {nash}", d.report.value);
        }
    }

    fn sched(v: &[u32]) -> Schedule {
        Schedule {
            targets: v.iter().map(|&i| NodeId(i)).collect(),
            movement_steps: 0,
            movement_cost: 0.0,
        }
    }

    #[test]
    fn schedule_br_picks_argmax() {
        let targets = vec![TargetSpec::zero_sum(NodeId(1), 1.0), TargetSpec::zero_sum(NodeId(2), 1.0)];
        let sfg = ScheduleFormGame::from_schedules(targets, vec![vec![sched(&[1]), sched(&[2])]]).unwrap();
        for m in [BrMethod::Enumerate, BrMethod::Mip] {
            let o = ScheduleOracles::new(&sfg, m);
            assert_eq!(o.defender_br(&[3.0, 5.0]).unwrap(), (vec![1], 5.0));
        }
    }

    #[test]
    fn full_coverage_gives_covered_payoff() {
        let targets = vec![TargetSpec::general(NodeId(1), -4.0, -1.0, 0.5, 4.0)];
        let sfg = ScheduleFormGame::from_schedules(targets, vec![vec![sched(&[1])]]).unwrap();
        let o = ScheduleOracles::new(&sfg, BrMethod::Auto);
        assert_eq!(o.attacker_br(&[vec![0]], &MixedStrategy::pure(1, 0)), (0, 0.5));
    }

    #[test]
    fn schedule_double_oracle_matches_matrix() {
        let g = grid(3, 3);
        let targets: Vec<_> = [(2, 1.0), (4, 2.0), (6, 1.5), (8, 3.0), (5, 0.5)]
            .iter()
            .map(|&(v, x)| TargetSpec::general(NodeId(v), -x, -x / 5.0, x / 5.0, x))
            .collect();
        let homes = vec![vec![NodeId(0)], vec![NodeId(8)]];
        let sfg = ScheduleFormGame::build(&g, targets, &homes, 6, 1, 0.0, ScheduleKind::General).unwrap();
        let m = schedule_game_matrix(&sfg, false).unwrap();
        let nash = nash_lp(&m.a).unwrap().value;
        for method in [BrMethod::Enumerate, BrMethod::Mip] {
            let o = ScheduleOracles::new(&sfg, method);
            let scale = o.normalization();
            let raw = schedule_game_matrix(&sfg, true).unwrap();
            assert!((scale - max_abs(&raw.b)).abs() < 1e-12);
            let d = double_oracle_sfg(&o, DO_EPSILON).unwrap();
            assert!((d.report.value / scale - nash).abs() < 1e-6, "{} vs {nash}", d.report.value / scale);
        }
    }
}
