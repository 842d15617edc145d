use std::path::{Path, PathBuf};

use serde::Deserialize;

use sgkit::game::{generate_player_actions, Player};
use sgkit::instance::{
    default_infra_weights, generate_gsg, generate_isg, require_known_types, GeneratedGame, GsgParams, IsgParams,
};
use sgkit::io::{from_json_str, load_blocks, load_features, load_json, load_tracks, load_weights, save_json, write_nfg, GameDocument, GraphDoc};
use sgkit::presets::{self, Experiment, LOBEKE_TRACK_SEED};
use sgkit::solvers::oracles::count_paths;

use crate::error::{config, CliResult};
use crate::output::emit;

/// Generation config. Relative data paths resolve against the config file's
/// directory.
#[derive(Debug, Deserialize)]
struct GenerateConfig {
    #[serde(default)]
    title: Option<String>,
    /// Also write `<out>.nfg` next to the game file.
    #[serde(default)]
    export_nfg: bool,
    /// Store the expanded payoff matrices inside the game file.
    #[serde(default)]
    store_matrix: bool,
    #[serde(flatten)]
    domain: Domain,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "domain", rename_all = "snake_case")]
enum Domain {
    Gsg { tracks: TrackSource, params: Params<GsgParams> },
    Isg { data: IsgData, params: Params<IsgParams> },
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case")]
enum Params<P> {
    Preset(PresetName),
    Custom(P),
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(tag = "experiment", rename_all = "snake_case")]
enum PresetName {
    SparsityNfg { timesteps: usize },
    SparsitySfg { timesteps: usize },
    IterativeNfg,
    IterativeSfg,
    SseSimple,
    SseGeneral,
}

impl From<PresetName> for Experiment {
    fn from(p: PresetName) -> Self {
        match p {
            PresetName::SparsityNfg { timesteps } => Experiment::SparsityNfg { timesteps },
            PresetName::SparsitySfg { timesteps } => Experiment::SparsitySfg { timesteps },
            PresetName::IterativeNfg => Experiment::IterativeNfg,
            PresetName::IterativeSfg => Experiment::IterativeSfg,
            PresetName::SseSimple => Experiment::SseSimple,
            PresetName::SseGeneral => Experiment::SseGeneral,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case")]
enum TrackSource {
    File(PathBuf),
    /// Synthetic park tracks; seed falls back to `--seed`, then the preset seed.
    Synthetic {
        #[serde(default)]
        seed: Option<u64>,
    },
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case")]
enum IsgData {
    Files {
        street_graph: PathBuf,
        features: PathBuf,
        blocks: PathBuf,
        /// Absent means the shipped weight table.
        #[serde(default)]
        weights: Option<PathBuf>,
    },
    Synthetic {
        features: usize,
        #[serde(default)]
        seed: Option<u64>,
    },
}

fn build(cfg: &GenerateConfig, base: &Path, seed: Option<u64>) -> CliResult<GeneratedGame> {
    let at = |p: &Path| base.join(p);
    match &cfg.domain {
        Domain::Gsg { tracks, params } => {
            let tracks = match tracks {
                TrackSource::File(p) => load_tracks(&at(p))?,
                TrackSource::Synthetic { seed: s } => presets::lobeke_tracks(s.or(seed).unwrap_or(LOBEKE_TRACK_SEED))?,
            };
            let params = match params {
                Params::Preset(p) => presets::lobeke_gsg((*p).into()),
                Params::Custom(p) => p.clone(),
            };
            Ok(generate_gsg(&tracks, &params)?)
        }
        Domain::Isg { data, params } => {
            let (graph, features, blocks, weights) = match data {
                IsgData::Files { street_graph, features, blocks, weights } => {
                    let doc: GraphDoc = load_json(&at(street_graph))?;
                    let weights = match weights {
                        Some(w) => load_weights(&at(w))?,
                        None => default_infra_weights(),
                    };
                    (doc.to_graph()?, load_features(&at(features))?, load_blocks(&at(blocks))?, weights)
                }
                IsgData::Synthetic { features, seed: s } => {
                    let (g, f, b) = presets::chinatown_data(*features, s.or(seed).unwrap_or(0))?;
                    (g, f, b, default_infra_weights())
                }
            };
            let params = match params {
                Params::Preset(p) => presets::chinatown_isg((*p).into()),
                Params::Custom(p) => p.clone(),
            };
            let (game, dropped) = generate_isg(graph, &features, &blocks, &weights, &params)?;
            require_known_types(&dropped)?;
            Ok(game)
        }
    }
}

/// Defender and attacker action counts without expanding the defender's
/// path set; the defender count saturates at `u128::MAX`.
fn action_counts(game: &GeneratedGame) -> CliResult<(u128, usize)> {
    if let Some(sfg) = &game.sfg {
        return Ok((sfg.joint_actions.len() as u128, sfg.targets.len()));
    }
    let c = &game.config;
    let mut def = 1u128;
    for (i, starts) in c.defender.starts.iter().enumerate() {
        let ends = c.defender.ends.get(i).cloned().unwrap_or_default();
        def = def.saturating_mul(count_paths(&game.graph, starts, &ends, c.num_timesteps, c.allow_wait, c.force_return)?);
    }
    let att = generate_player_actions(&game.graph, c, &game.targets, Player::Attacker)?.len();
    Ok((def, att))
}

pub fn run(config_path: &Path, out: &Path, seed: Option<u64>) -> CliResult<()> {
    let text = std::fs::read_to_string(config_path)
        .map_err(|e| config(format!("cannot read {}: {e}", config_path.display())))?;
    let cfg: GenerateConfig = from_json_str(&text, &config_path.display().to_string())?;
    let base = config_path.parent().unwrap_or(Path::new("."));
    let game = build(&cfg, base, seed)?;
    let doc = GameDocument::from_generated(&game, cfg.title.clone(), cfg.store_matrix)?;
    save_json(out, &doc)?;
    if cfg.export_nfg {
        let title = cfg.title.as_deref().unwrap_or("sgkit game");
        emit(Some(&out.with_extension("nfg")), &write_nfg(&game.matrix()?, title)?)?;
    }
    let (def, att) = action_counts(&game)?;
    println!("nodes {} targets {} defender_actions {def} attacker_actions {att}", game.graph.len(), game.targets.len());
    Ok(())
}
