//! Domain game generation: grid worlds scored from animal tracks and street
//! graphs scored from infrastructure features.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::game::{
    build_utility_matrix, generate_player_actions, GameConfig, InterdictionProtocol, Player, PlayerSetup, TargetSpec,
    UtilityMode,
};
use crate::geo::{disc_meets_polygon, distance_to_line_m, equirectangular_m, kmeans, point_in_polygon, BoundingBox};
use crate::graph::{Coord, DirectedGameGraph, DistanceMetric, Node, NodeId};
use crate::matrix::BimatrixGame;
use crate::schedule::{schedule_game_matrix, scale_target_utilities, ScheduleFormGame, ScheduleKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackRecord {
    pub animal_id: String,
    pub lat: f64,
    pub lon: f64,
    pub timestamp: String,
}

impl TrackRecord {
    pub fn coord(&self) -> Coord {
        Coord::new(self.lat, self.lon)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRecord {
    pub id: String,
    #[serde(rename = "type")]
    pub kind: String,
    pub lat: f64,
    pub lon: f64,
}

/// Census-style block. `polygon` holds `[lat, lon]` vertices, open or closed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationBlock {
    pub geoid: String,
    pub population: u64,
    pub polygon: Vec<[f64; 2]>,
}

impl PopulationBlock {
    pub fn ring(&self) -> Vec<Coord> {
        self.polygon.iter().map(|&[lat, lon]| Coord::new(lat, lon)).collect()
    }
}

/// Relative importance per feature type; every weight is > 0.
pub type WeightTable = BTreeMap<String, f64>;

/// Shipped infrastructure weights.
pub fn default_infra_weights() -> WeightTable {
    [
        ("plant", 1.5),
        ("solar_generator", 0.95),
        ("hospital", 1.5),
        ("clinic", 1.35),
        ("police", 1.4),
        ("school", 1.25),
        ("university", 1.4),
        ("substation", 1.45),
        ("water_works", 1.45),
        ("fire_station", 1.3),
        ("communications_tower", 1.25),
        ("pole", 0.85),
        ("tower", 1.1),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect()
}

/// Regular `rows x cols` partition of a bounding box. Row 0 is the southern
/// edge; node `r * cols + c` sits at the centre of cell `(r, c)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub bbox: BoundingBox,
    pub rows: usize,
    pub cols: usize,
}

impl Grid {
    pub fn new(bbox: BoundingBox, rows: usize, cols: usize) -> Result<Self> {
        bbox.validate()?;
        if rows < 1 || cols < 1 {
            return Err(invalid("grid needs at least one row and column"));
        }
        if rows.saturating_mul(cols) > u32::MAX as usize {
            return Err(invalid("grid too large"));
        }
        Ok(Grid { bbox, rows, cols })
    }

    pub fn node(&self, r: usize, c: usize) -> NodeId {
        NodeId((r * self.cols + c) as u32)
    }

    pub fn center(&self, r: usize, c: usize) -> Coord {
        let dlat = (self.bbox.lat_max - self.bbox.lat_min) / self.rows as f64;
        let dlon = (self.bbox.lon_max - self.bbox.lon_min) / self.cols as f64;
        Coord::new(
            self.bbox.lat_min + (r as f64 + 0.5) * dlat,
            self.bbox.lon_min + (c as f64 + 0.5) * dlon,
        )
    }

    /// Containing cell; points on the northern or eastern edge fall in the
    /// last row or column.
    pub fn cell_of(&self, p: Coord) -> Option<NodeId> {
        if !self.bbox.contains(p) {
            return None;
        }
        let fr = (p.lat - self.bbox.lat_min) / (self.bbox.lat_max - self.bbox.lat_min);
        let fc = (p.lon - self.bbox.lon_min) / (self.bbox.lon_max - self.bbox.lon_min);
        let r = ((fr * self.rows as f64) as usize).min(self.rows - 1);
        let c = ((fc * self.cols as f64) as usize).min(self.cols - 1);
        Some(self.node(r, c))
    }

    /// Cell-centre nodes with 4-neighbour edges in both directions.
    pub fn graph(&self) -> Result<DirectedGameGraph> {
        let mut nodes = Vec::with_capacity(self.rows * self.cols);
        let mut edges = Vec::new();
        for r in 0..self.rows {
            for c in 0..self.cols {
                nodes.push(Node { id: self.node(r, c), coord: Some(self.center(r, c)) });
                if c + 1 < self.cols {
                    edges.push((self.node(r, c), self.node(r, c + 1)));
                }
                if r + 1 < self.rows {
                    edges.push((self.node(r, c), self.node(r + 1, c)));
                }
            }
        }
        DirectedGameGraph::undirected(nodes, edges, DistanceMetric::HopCount)
    }
}

pub fn build_grid_graph(bbox: BoundingBox, rows: usize, cols: usize) -> Result<DirectedGameGraph> {
    Grid::new(bbox, rows, cols)?.graph()
}

/// Nonnegative activity score attached to a graph node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoredTarget {
    pub node: NodeId,
    pub score: f64,
}

/// Sums scores that land on one node; output is sorted by node id.
fn merge_by_node(scores: impl IntoIterator<Item = (NodeId, f64)>) -> Vec<ScoredTarget> {
    let mut acc: BTreeMap<NodeId, f64> = BTreeMap::new();
    for (node, s) in scores {
        *acc.entry(node).or_default() += s;
    }
    acc.into_iter().map(|(node, score)| ScoredTarget { node, score }).collect()
}

fn check_coord(lat: f64, lon: f64) -> Result<()> {
    if !((-90.0..=90.0).contains(&lat) && (-180.0..=180.0).contains(&lon)) {
        return Err(invalid(format!("coordinate ({lat}, {lon}) out of range")));
    }
    Ok(())
}

/// In-bbox observations and the number of distinct animals among them.
fn in_bbox(tracks: &[TrackRecord], bbox: &BoundingBox) -> Result<(Vec<Coord>, usize)> {
    let mut pts = Vec::new();
    let mut animals = BTreeSet::new();
    for t in tracks {
        check_coord(t.lat, t.lon)?;
        if bbox.contains(t.coord()) {
            pts.push(t.coord());
            animals.insert(t.animal_id.as_str());
        }
    }
    Ok((pts, animals.len()))
}

/// k-means over in-bbox observations. Each centroid snaps to its nearest
/// grid node and scores `cluster_size * animals / observations`.
pub fn score_targets_centroid(tracks: &[TrackRecord], k: usize, grid: &Grid, seed: u64) -> Result<Vec<ScoredTarget>> {
    let (pts, animals) = in_bbox(tracks, &grid.bbox)?;
    if pts.is_empty() {
        return Err(invalid("no observations inside the bounding box"));
    }
    let km = kmeans(&pts, k, seed)?;
    let graph = grid.graph()?;
    let ratio = animals as f64 / pts.len() as f64;
    let snapped = km
        .centroids
        .iter()
        .zip(&km.sizes)
        .filter(|(_, &size)| size > 0)
        .map(|(c, &size)| {
            let node = graph.nearest_node(*c).expect("grid nodes carry coordinates");
            (node, size as f64 * ratio)
        })
        .collect::<Vec<_>>();
    Ok(merge_by_node(snapped))
}

/// Per-cell observation counts scaled by `animals / observations`. Cells
/// without observations yield no target.
pub fn score_targets_density(tracks: &[TrackRecord], grid: &Grid) -> Result<Vec<ScoredTarget>> {
    let (pts, animals) = in_bbox(tracks, &grid.bbox)?;
    if pts.is_empty() {
        return Ok(Vec::new());
    }
    let ratio = animals as f64 / pts.len() as f64;
    Ok(merge_by_node(pts.iter().filter_map(|p| grid.cell_of(*p)).map(|n| (n, ratio))))
}

/// Score plus the attacker's escape-adjusted value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValuedTarget {
    pub node: NodeId,
    pub score: f64,
    pub attacker_value: f64,
}

/// `score * (1 + alpha * (d_max - d) / (d_max - d_min))`; the fraction is 0
/// when every distance is equal.
pub fn escape_values(scores: &[f64], distances: &[f64], alpha: f64) -> Vec<f64> {
    let d_min = distances.iter().copied().fold(f64::INFINITY, f64::min);
    let d_max = distances.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = d_max - d_min;
    scores
        .iter()
        .zip(distances)
        .map(|(&s, &d)| {
            let frac = if span > 0.0 { (d_max - d) / span } else { 0.0 };
            s * (1.0 + alpha * frac)
        })
        .collect()
}

fn apply_escape(
    targets: &[ScoredTarget],
    graph: &DirectedGameGraph,
    alpha: f64,
    dist: impl Fn(Coord) -> f64,
) -> Result<Vec<ValuedTarget>> {
    if !(alpha >= 0.0) {
        return Err(invalid("alpha must be >= 0"));
    }
    let distances = targets
        .iter()
        .map(|t| {
            graph
                .coord(t.node)
                .map(&dist)
                .ok_or_else(|| invalid(format!("node {} has no coordinate", t.node)))
        })
        .collect::<Result<Vec<_>>>()?;
    let scores: Vec<f64> = targets.iter().map(|t| t.score).collect();
    Ok(targets
        .iter()
        .zip(escape_values(&scores, &distances, alpha))
        .map(|(t, v)| ValuedTarget { node: t.node, score: t.score, attacker_value: v })
        .collect())
}

/// Targets nearer the escape line are worth up to `1 + alpha` times more.
pub fn apply_escape_line(
    targets: &[ScoredTarget],
    graph: &DirectedGameGraph,
    line: [Coord; 2],
    alpha: f64,
) -> Result<Vec<ValuedTarget>> {
    apply_escape(targets, graph, alpha, |c| distance_to_line_m(c, line[0], line[1]))
}

/// Targets nearer the escape point are worth up to `1 + alpha` times more.
pub fn apply_escape_point(
    targets: &[ScoredTarget],
    graph: &DirectedGameGraph,
    point: Coord,
    alpha: f64,
) -> Result<Vec<ValuedTarget>> {
    apply_escape(targets, graph, alpha, |c| equirectangular_m(c, point))
}

pub fn without_escape(targets: &[ScoredTarget]) -> Vec<ValuedTarget> {
    targets
        .iter()
        .map(|t| ValuedTarget { node: t.node, score: t.score, attacker_value: t.score })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum PopulationMode {
    /// Population of the first block containing the feature.
    Block,
    /// Total population of blocks meeting a disc around the feature.
    Radius { radius_m: f64 },
}

/// `weight * ln(population + 1)^alpha`.
pub fn raw_infra_score(weight: f64, population: u64, alpha: f64) -> f64 {
    weight * ((population as f64) + 1.0).ln().powf(alpha)
}

pub fn feature_population(p: Coord, blocks: &[(u64, Vec<Coord>)], mode: PopulationMode) -> u64 {
    match mode {
        PopulationMode::Block => blocks
            .iter()
            .find(|(_, ring)| point_in_polygon(p, ring))
            .map_or(0, |(pop, _)| *pop),
        PopulationMode::Radius { radius_m } => blocks
            .iter()
            .filter(|(_, ring)| disc_meets_polygon(p, radius_m, ring))
            .map(|(pop, _)| *pop)
            .sum(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfraScoring {
    /// Nonzero scores, summed per street node.
    pub targets: Vec<ScoredTarget>,
    /// Feature types absent from the weight table, with their counts.
    pub dropped: BTreeMap<String, usize>,
}

/// Scores each weighted feature from surrounding population and snaps it to
/// the nearest street node. Features outside `bbox` are ignored.
pub fn score_infra_targets(
    features: &[FeatureRecord],
    blocks: &[PopulationBlock],
    weights: &WeightTable,
    mode: PopulationMode,
    alpha_pop: f64,
    street_graph: &DirectedGameGraph,
    bbox: Option<&BoundingBox>,
) -> Result<InfraScoring> {
    if let Some((k, w)) = weights.iter().find(|(_, w)| !(**w > 0.0)) {
        return Err(invalid(format!("weight for {k:?} must be > 0, got {w}")));
    }
    if let PopulationMode::Radius { radius_m } = mode {
        if !(radius_m >= 0.0) {
            return Err(invalid("radius must be >= 0"));
        }
    }
    let rings: Vec<(u64, Vec<Coord>)> = blocks.iter().map(|b| (b.population, b.ring())).collect();
    let mut dropped = BTreeMap::new();
    let mut scored = Vec::new();
    for f in features {
        check_coord(f.lat, f.lon)?;
        let p = Coord::new(f.lat, f.lon);
        if bbox.is_some_and(|b| !b.contains(p)) {
            continue;
        }
        let Some(&w) = weights.get(&f.kind) else {
            *dropped.entry(f.kind.clone()).or_insert(0) += 1;
            continue;
        };
        let node = street_graph
            .nearest_node(p)
            .ok_or_else(|| invalid("street graph has no node coordinates"))?;
        scored.push((node, raw_infra_score(w, feature_population(p, &rings, mode), alpha_pop)));
    }
    let targets = merge_by_node(scored).into_iter().filter(|t| t.score > 0.0).collect();
    Ok(InfraScoring { targets, dropped })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum GameForm {
    Nfg,
    Sfg { kind: ScheduleKind },
}

fn default_one() -> f64 {
    1.0
}
fn default_one_usize() -> usize {
    1
}
fn default_true() -> bool {
    true
}

/// Parameters shared by both domains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameParams {
    #[serde(default = "default_one_usize")]
    pub num_attackers: usize,
    /// Candidate home bases per defender; the defender count is its length.
    pub home_bases: Vec<Vec<Coord>>,
    pub num_timesteps: usize,
    pub defense_time_threshold: u32,
    #[serde(default)]
    pub capture_radius: f64,
    #[serde(default = "default_true")]
    pub force_return: bool,
    #[serde(default = "default_true")]
    pub allow_wait: bool,
    pub form: GameForm,
    #[serde(default)]
    pub general_sum: bool,
    #[serde(default = "default_one")]
    pub attacker_value: f64,
    #[serde(default = "default_one")]
    pub defender_value: f64,
    /// Covered payoffs are uncovered ones divided by these; absent means
    /// covered payoffs of zero.
    #[serde(default)]
    pub attacker_penalty_factor: Option<f64>,
    #[serde(default)]
    pub defender_penalty_factor: Option<f64>,
    #[serde(default)]
    pub defender_step_cost: f64,
    /// Seed for replacing target values with uniform draws from their range.
    #[serde(default)]
    pub randomize_targets: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum ScoringMethod {
    Centroid { num_clusters: usize },
    Density,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GsgParams {
    pub bbox: BoundingBox,
    pub rows: usize,
    pub cols: usize,
    pub scoring: ScoringMethod,
    #[serde(default)]
    pub kmeans_seed: u64,
    #[serde(default)]
    pub escape_line: Option<[Coord; 2]>,
    #[serde(default)]
    pub alpha: f64,
    #[serde(flatten)]
    pub game: GameParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsgParams {
    #[serde(default)]
    pub bbox: Option<BoundingBox>,
    pub population_mode: PopulationMode,
    #[serde(default = "default_one")]
    pub alpha_pop: f64,
    #[serde(default)]
    pub escape_point: Option<Coord>,
    #[serde(default)]
    pub alpha_escape: f64,
    #[serde(flatten)]
    pub game: GameParams,
}

/// Assembled game ready for the solvers.
#[derive(Debug, Clone)]
pub struct GeneratedGame {
    pub graph: DirectedGameGraph,
    pub targets: Vec<TargetSpec>,
    pub config: GameConfig,
    pub protocol: InterdictionProtocol,
    pub homes: Vec<Vec<NodeId>>,
    pub form: GameForm,
    pub general_sum: bool,
    pub sfg: Option<ScheduleFormGame>,
}

impl GeneratedGame {
    /// Normal-form matrix: the expanded schedule game for SFG instances, the
    /// full path game otherwise.
    pub fn matrix(&self) -> Result<BimatrixGame> {
        if let Some(sfg) = &self.sfg {
            return schedule_game_matrix(sfg, self.general_sum);
        }
        let def = generate_player_actions(&self.graph, &self.config, &self.targets, Player::Defender)?;
        let att = generate_player_actions(&self.graph, &self.config, &self.targets, Player::Attacker)?;
        let mode = if self.general_sum {
            UtilityMode::GeneralSum { step_cost: self.config.defender_step_cost, normalize: false }
        } else {
            UtilityMode::ZeroSum
        };
        build_utility_matrix(&def, &att, &self.targets, &self.protocol, &self.graph, mode)
    }
}

/// Replaces target payoffs with uniform draws from the range of the real
/// ones, keeping covered payoffs no better for the attacker and no worse for
/// the defender than uncovered ones. Zero-sum targets stay zero-sum.
pub fn randomize_target_values<R: Rng>(targets: &[TargetSpec], zero_sum: bool, rng: &mut R) -> Vec<TargetSpec> {
    let range = |vals: Vec<f64>| {
        let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    };
    let (a_lo, a_hi) = range(targets.iter().flat_map(|t| [t.u_a_covered, t.u_a_uncovered]).collect());
    let (d_lo, d_hi) = range(targets.iter().flat_map(|t| [t.u_d_covered, t.u_d_uncovered]).collect());
    let (v_lo, v_hi) = range(targets.iter().map(|t| t.value).collect());
    let draw = |rng: &mut R, lo: f64, hi: f64| if hi > lo { rng.gen_range(lo..=hi) } else { lo };
    targets
        .iter()
        .map(|t| {
            if zero_sum && t.u_a_covered == 0.0 && t.u_d_covered == 0.0 {
                return TargetSpec::zero_sum(t.node_id, draw(rng, v_lo, v_hi));
            }
            let (x, y) = (draw(rng, a_lo, a_hi), draw(rng, a_lo, a_hi));
            let (a_cov, a_unc) = (x.min(y), x.max(y));
            let (d_unc, d_cov) = if zero_sum {
                (-a_unc, -a_cov)
            } else {
                let (p, q) = (draw(rng, d_lo, d_hi), draw(rng, d_lo, d_hi));
                (p.min(q), p.max(q))
            };
            TargetSpec::general(t.node_id, d_unc, d_cov, a_cov, a_unc)
        })
        .collect()
}

/// Builds target payoffs from valued targets and the shared parameters.
pub fn target_specs(valued: &[ValuedTarget], p: &GameParams) -> Result<Vec<TargetSpec>> {
    if !(p.attacker_value > 0.0 && p.defender_value > 0.0) {
        return Err(invalid("target value multipliers must be > 0"));
    }
    let mut targets: Vec<TargetSpec> = valued
        .iter()
        .map(|v| {
            if p.general_sum {
                TargetSpec::general(v.node, -v.score * p.defender_value, 0.0, 0.0, v.attacker_value * p.attacker_value)
            } else {
                TargetSpec::zero_sum(v.node, v.attacker_value * p.attacker_value)
            }
        })
        .collect();
    if p.attacker_penalty_factor.is_some() || p.defender_penalty_factor.is_some() {
        let fa = p.attacker_penalty_factor.unwrap_or(f64::INFINITY);
        let fd = p.defender_penalty_factor.unwrap_or(f64::INFINITY);
        targets = scale_target_utilities(&targets, fa, fd)?;
    }
    if let Some(seed) = p.randomize_targets {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        targets = randomize_target_values(&targets, !p.general_sum, &mut rng);
    }
    Ok(targets)
}

/// Snaps home bases, builds the player configuration and, for schedule
/// form, the schedule lists.
pub fn assemble(
    graph: DirectedGameGraph,
    valued: &[ValuedTarget],
    p: &GameParams,
    bbox: Option<&BoundingBox>,
) -> Result<GeneratedGame> {
    if valued.is_empty() {
        return Err(invalid("instance has no targets"));
    }
    if p.home_bases.is_empty() || p.home_bases.iter().any(Vec::is_empty) {
        return Err(invalid("every defender needs at least one home base"));
    }
    if p.num_attackers < 1 || p.num_attackers > valued.len() {
        return Err(invalid(format!("{} attackers for {} targets", p.num_attackers, valued.len())));
    }
    let protocol = InterdictionProtocol::new(p.capture_radius, p.defense_time_threshold)?;
    let mut homes = Vec::with_capacity(p.home_bases.len());
    for bases in &p.home_bases {
        let mut snapped = Vec::new();
        for &c in bases {
            if bbox.is_some_and(|b| !b.contains(c)) {
                return Err(invalid(format!("home base ({}, {}) lies outside the bounding box", c.lat, c.lon)));
            }
            let node = graph.nearest_node(c).ok_or_else(|| invalid("graph has no node coordinates"))?;
            if !snapped.contains(&node) {
                snapped.push(node);
            }
        }
        homes.push(snapped);
    }
    let targets = target_specs(valued, p)?;
    let home_sets: Vec<BTreeSet<NodeId>> = homes.iter().map(|h| h.iter().copied().collect()).collect();
    let config = GameConfig {
        num_timesteps: p.num_timesteps,
        attacker: PlayerSetup { moving: 0, stationary: p.num_attackers, starts: Vec::new(), ends: Vec::new() },
        defender: PlayerSetup {
            moving: homes.len(),
            stationary: 0,
            starts: home_sets.clone(),
            ends: home_sets,
        },
        allow_wait: p.allow_wait,
        force_return: p.force_return,
        defender_step_cost: p.defender_step_cost,
    };
    config.validate(&graph)?;
    let sfg = match p.form {
        GameForm::Nfg => None,
        GameForm::Sfg { kind } => Some(ScheduleFormGame::build(
            &graph,
            targets.clone(),
            &homes,
            p.num_timesteps - 1,
            p.defense_time_threshold as usize,
            p.defender_step_cost,
            kind,
        )?),
    };
    Ok(GeneratedGame { graph, targets, config, protocol, homes, form: p.form, general_sum: p.general_sum, sfg })
}

/// Green security game on a grid over `params.bbox`.
pub fn generate_gsg(tracks: &[TrackRecord], params: &GsgParams) -> Result<GeneratedGame> {
    let grid = Grid::new(params.bbox, params.rows, params.cols)?;
    let scored = match params.scoring {
        ScoringMethod::Centroid { num_clusters } => score_targets_centroid(tracks, num_clusters, &grid, params.kmeans_seed)?,
        ScoringMethod::Density => score_targets_density(tracks, &grid)?,
    };
    let graph = grid.graph()?;
    let valued = match params.escape_line {
        Some(line) => apply_escape_line(&scored, &graph, line, params.alpha)?,
        None => without_escape(&scored),
    };
    assemble(graph, &valued, &params.game, Some(&params.bbox))
}

/// Infrastructure security game on a supplied street graph.
pub fn generate_isg(
    street_graph: DirectedGameGraph,
    features: &[FeatureRecord],
    blocks: &[PopulationBlock],
    weights: &WeightTable,
    params: &IsgParams,
) -> Result<(GeneratedGame, BTreeMap<String, usize>)> {
    let scoring = score_infra_targets(
        features,
        blocks,
        weights,
        params.population_mode,
        params.alpha_pop,
        &street_graph,
        params.bbox.as_ref(),
    )?;
    let valued = match params.escape_point {
        Some(pt) => apply_escape_point(&scoring.targets, &street_graph, pt, params.alpha_escape)?,
        None => without_escape(&scoring.targets),
    };
    let game = assemble(street_graph, &valued, &params.game, params.bbox.as_ref())?;
    Ok((game, scoring.dropped))
}

/// Fails when any feature type is missing from the weight table.
pub fn require_known_types(dropped: &BTreeMap<String, usize>) -> Result<()> {
    match dropped.keys().next() {
        None => Ok(()),
        Some(k) => Err(Error::InvalidParameter(format!(
            "no weight for feature type {k:?} ({} feature(s))",
            dropped[k]
        ))),
    }
}
