//! Shipped configurations: a Lobéké-style park and a Chinatown-style street
//! grid, with seeded synthetic data in place of the original datasets.

use chrono::{Duration, TimeZone, Utc};
use rand::seq::index::sample;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{invalid, Result};
use crate::geo::BoundingBox;
use crate::graph::{Coord, DirectedGameGraph, DistanceMetric, Node, NodeId};
use crate::instance::{
    default_infra_weights, FeatureRecord, GameForm, GameParams, Grid, GsgParams, IsgParams, PopulationBlock, PopulationMode,
    ScoringMethod, TrackRecord,
};
use crate::random_lab::sample_rng;
use crate::schedule::ScheduleKind;

pub const LOBEKE_BBOX: BoundingBox = BoundingBox { lat_min: 2.0530, lat_max: 2.2837, lon_min: 15.8790, lon_max: 16.2038 };
pub const KABO_DJEMBE: Coord = Coord { lat: 2.0532, lon: 16.0857 };
pub const BOMASSA: Coord = Coord { lat: 2.2037, lon: 16.1871 };
pub const INNER_POST: Coord = Coord { lat: 2.2000, lon: 15.9800 };
pub const SANGHA_RIVER: [Coord; 2] = [Coord { lat: 2.2837, lon: 16.1628 }, Coord { lat: 2.053, lon: 16.0662 }];
pub const LOBEKE_ANIMALS: usize = 6;
pub const LOBEKE_OBSERVATIONS: usize = 3183;
/// Track seed whose synthetic data gives ten distinct centroid targets under
/// the preset k-means seed.
pub const LOBEKE_TRACK_SEED: u64 = 8;

pub const CHINATOWN_BBOX: BoundingBox = BoundingBox { lat_min: 40.710, lat_max: 40.7215, lon_min: -74.010, lon_max: -73.9935 };
pub const FIRST_PRECINCT: Coord = Coord { lat: 40.7204, lon: -74.0070 };
pub const FIFTH_PRECINCT: Coord = Coord { lat: 40.7163, lon: -73.9974 };
pub const POLICE_PLAZA: Coord = Coord { lat: 40.7124, lon: -74.0017 };
pub const TROOP_NYC: Coord = Coord { lat: 40.7166, lon: -74.0064 };
pub const BOOKING_STATION: Coord = Coord { lat: 40.7162, lon: -74.0010 };
pub const BROOKLYN_BRIDGE: Coord = Coord { lat: 40.7124, lon: -74.0049 };

/// Which published experiment a preset reproduces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    /// Zero-sum normal form, one defender, no forced return.
    SparsityNfg { timesteps: usize },
    /// Zero-sum general schedules, two defenders, threshold 2.
    SparsitySfg { timesteps: usize },
    IterativeNfg,
    IterativeSfg,
    /// General-sum singleton schedules.
    SseSimple,
    /// General-sum general schedules with step costs.
    SseGeneral,
}

fn base_game(defenders: usize, homes: &[Coord], timesteps: usize, threshold: u32, force_return: bool, form: GameForm) -> GameParams {
    GameParams {
        num_attackers: 1,
        home_bases: vec![homes.to_vec(); defenders],
        num_timesteps: timesteps,
        defense_time_threshold: threshold,
        capture_radius: 0.0,
        force_return,
        allow_wait: true,
        form,
        general_sum: false,
        attacker_value: 1.0,
        defender_value: 1.0,
        attacker_penalty_factor: None,
        defender_penalty_factor: None,
        defender_step_cost: 0.0,
        randomize_targets: None,
    }
}

const GENERAL: GameForm = GameForm::Sfg { kind: ScheduleKind::General };
const SIMPLE: GameForm = GameForm::Sfg { kind: ScheduleKind::Simple };

/// Lobéké park: 7 x 7 grid, ten centroid targets, three ranger bases.
pub fn lobeke_gsg(experiment: Experiment) -> GsgParams {
    let homes = [KABO_DJEMBE, BOMASSA, INNER_POST];
    let (game, alpha) = match experiment {
        Experiment::SparsityNfg { timesteps } => (base_game(1, &homes, timesteps, 1, false, GameForm::Nfg), 0.0),
        Experiment::SparsitySfg { timesteps } => (penalised(base_game(2, &homes, timesteps, 2, true, GENERAL), 5.0), 0.0),
        Experiment::IterativeNfg => (base_game(1, &homes, 7, 1, false, GameForm::Nfg), 0.0),
        Experiment::IterativeSfg => (penalised(base_game(2, &homes, 7, 1, true, GENERAL), 5.0), 0.0),
        Experiment::SseSimple => (general_sum(base_game(2, &homes, 7, 1, true, SIMPLE), 5.0, 2350.0, 22966.0, 0.0), 1.0),
        Experiment::SseGeneral => (general_sum(base_game(2, &homes, 7, 1, true, GENERAL), 5.0, 2350.0, 22966.0, 1.17), 1.0),
    };
    GsgParams {
        bbox: LOBEKE_BBOX,
        rows: 7,
        cols: 7,
        scoring: ScoringMethod::Centroid { num_clusters: 10 },
        kmeans_seed: 0,
        escape_line: (alpha > 0.0).then_some(SANGHA_RIVER),
        alpha,
        game,
    }
}

/// Chinatown street grid with five police bases and a bridge escape point.
pub fn chinatown_isg(experiment: Experiment) -> IsgParams {
    let homes = [FIRST_PRECINCT, FIFTH_PRECINCT, POLICE_PLAZA, TROOP_NYC, BOOKING_STATION];
    let (game, alpha) = match experiment {
        Experiment::SparsityNfg { timesteps } => (base_game(1, &homes, timesteps, 1, true, GameForm::Nfg), 0.0),
        Experiment::SparsitySfg { timesteps } => (penalised(base_game(2, &homes, timesteps, 2, true, GENERAL), 3.0), 0.0),
        Experiment::IterativeNfg => (base_game(1, &homes, 7, 1, true, GameForm::Nfg), 0.0),
        Experiment::IterativeSfg => (penalised(base_game(2, &homes, 7, 1, true, GENERAL), 3.0), 0.0),
        Experiment::SseSimple => (general_sum(base_game(3, &homes, 7, 1, true, SIMPLE), 3.0, 1.0, 100.0, 0.0), 0.5),
        Experiment::SseGeneral => (general_sum(base_game(3, &homes, 7, 1, true, GENERAL), 3.0, 1.0, 100.0, 1.0), 0.5),
    };
    IsgParams {
        bbox: Some(CHINATOWN_BBOX),
        population_mode: PopulationMode::Block,
        alpha_pop: 1.0,
        escape_point: (alpha > 0.0).then_some(BROOKLYN_BRIDGE),
        alpha_escape: alpha,
        game,
    }
}

fn penalised(mut g: GameParams, factor: f64) -> GameParams {
    g.attacker_penalty_factor = Some(factor);
    g.defender_penalty_factor = Some(factor);
    g
}

fn general_sum(g: GameParams, factor: f64, attacker: f64, defender: f64, step_cost: f64) -> GameParams {
    let mut g = penalised(g, factor);
    g.general_sum = true;
    g.attacker_value = attacker;
    g.defender_value = defender;
    g.defender_step_cost = step_cost;
    g
}

fn uniform_in<R: Rng>(rng: &mut R, b: &BoundingBox, margin: f64) -> Coord {
    let dl = (b.lat_max - b.lat_min) * margin;
    let dn = (b.lon_max - b.lon_min) * margin;
    Coord::new(rng.gen_range(b.lat_min + dl..b.lat_max - dl), rng.gen_range(b.lon_min + dn..b.lon_max - dn))
}

/// Hourly GPS fixes of `animals` individuals moving between `hotspots`
/// activity centres placed at distinct cell centres of a `cells.0 x cells.1`
/// partition of `bbox`. Each fix is Gaussian around the animal's current
/// centre with a spread of a tenth of a cell, and the centre changes with
/// probability 0.05 per hour. Fixes are spread round-robin over the animals.
pub fn synthetic_tracks(
    bbox: &BoundingBox,
    cells: (usize, usize),
    animals: usize,
    observations: usize,
    hotspots: usize,
    seed: u64,
) -> Result<Vec<TrackRecord>> {
    let grid = Grid::new(*bbox, cells.0, cells.1)?;
    if animals == 0 || hotspots == 0 {
        return Err(invalid("need at least one animal and one hotspot"));
    }
    if hotspots > cells.0 * cells.1 {
        return Err(invalid(format!("{hotspots} hotspots exceed {} cells", cells.0 * cells.1)));
    }
    let mut rng = sample_rng(seed, 0);
    let centres: Vec<Coord> = sample(&mut rng, cells.0 * cells.1, hotspots)
        .into_iter()
        .map(|i| grid.center(i / cells.1, i % cells.1))
        .collect();
    let lat_sd = 0.1 * (bbox.lat_max - bbox.lat_min) / cells.0 as f64;
    let lon_sd = 0.1 * (bbox.lon_max - bbox.lon_min) / cells.1 as f64;
    let lat_noise = Normal::new(0.0, lat_sd).map_err(|e| invalid(e.to_string()))?;
    let lon_noise = Normal::new(0.0, lon_sd).map_err(|e| invalid(e.to_string()))?;
    let mut at: Vec<usize> = (0..animals).map(|a| a % hotspots).collect();
    let start = Utc.with_ymd_and_hms(2020, 1, 1, 0, 0, 0).single().expect("valid start time");
    let mut out = Vec::with_capacity(observations);
    for i in 0..observations {
        let a = i % animals;
        if rng.gen_bool(0.05) {
            at[a] = rng.gen_range(0..hotspots);
        }
        let c = centres[at[a]];
        let when = start + Duration::hours((i / animals) as i64);
        out.push(TrackRecord {
            animal_id: format!("elephant-{}", a + 1),
            lat: (c.lat + lat_noise.sample(&mut rng)).clamp(-90.0, 90.0),
            lon: (c.lon + lon_noise.sample(&mut rng)).clamp(-180.0, 180.0),
            timestamp: when.format("%Y-%m-%dT%H:%M:%SZ").to_string(),
        });
    }
    Ok(out)
}

/// Synthetic Lobéké tracks with the published animal and fix counts.
pub fn lobeke_tracks(seed: u64) -> Result<Vec<TrackRecord>> {
    synthetic_tracks(&LOBEKE_BBOX, (7, 7), LOBEKE_ANIMALS, LOBEKE_OBSERVATIONS, 10, seed)
}

/// Street lattice over `bbox` with `rows x cols` intersections, two-way
/// streets, and one population block per lattice cell.
pub fn street_grid(bbox: &BoundingBox, rows: usize, cols: usize) -> Result<DirectedGameGraph> {
    bbox.validate()?;
    if rows < 2 || cols < 2 {
        return Err(invalid("street grid needs at least 2 x 2 intersections"));
    }
    let at = |r: usize, c: usize| {
        Coord::new(
            bbox.lat_min + (bbox.lat_max - bbox.lat_min) * r as f64 / (rows - 1) as f64,
            bbox.lon_min + (bbox.lon_max - bbox.lon_min) * c as f64 / (cols - 1) as f64,
        )
    };
    let id = |r: usize, c: usize| NodeId((r * cols + c) as u32);
    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            nodes.push(Node { id: id(r, c), coord: Some(at(r, c)) });
            if c + 1 < cols {
                edges.push((id(r, c), id(r, c + 1)));
            }
            if r + 1 < rows {
                edges.push((id(r, c), id(r + 1, c)));
            }
        }
    }
    DirectedGameGraph::undirected(nodes, edges, DistanceMetric::HopCount)
}

/// Street graph, features of every default weight type, and population
/// blocks for the Chinatown preset.
pub fn chinatown_data(features: usize, seed: u64) -> Result<(DirectedGameGraph, Vec<FeatureRecord>, Vec<PopulationBlock>)> {
    let (rows, cols) = (5, 6);
    let b = CHINATOWN_BBOX;
    let graph = street_grid(&b, rows, cols)?;
    let mut rng = sample_rng(seed, 1);
    let mut blocks = Vec::new();
    for r in 0..rows - 1 {
        for c in 0..cols - 1 {
            let lat0 = b.lat_min + (b.lat_max - b.lat_min) * r as f64 / (rows - 1) as f64;
            let lat1 = b.lat_min + (b.lat_max - b.lat_min) * (r + 1) as f64 / (rows - 1) as f64;
            let lon0 = b.lon_min + (b.lon_max - b.lon_min) * c as f64 / (cols - 1) as f64;
            let lon1 = b.lon_min + (b.lon_max - b.lon_min) * (c + 1) as f64 / (cols - 1) as f64;
            blocks.push(PopulationBlock {
                geoid: format!("36061{:04}", r * cols + c),
                population: rng.gen_range(50..5000),
                polygon: vec![[lat0, lon0], [lat0, lon1], [lat1, lon1], [lat1, lon0], [lat0, lon0]],
            });
        }
    }
    let kinds: Vec<String> = default_infra_weights().into_keys().collect();
    let feats = (0..features)
        .map(|i| {
            let p = uniform_in(&mut rng, &b, 0.02);
            FeatureRecord { id: format!("node/{}", 1000 + i), kind: kinds[rng.gen_range(0..kinds.len())].clone(), lat: p.lat, lon: p.lon }
        })
        .collect();
    Ok((graph, feats, blocks))
}
