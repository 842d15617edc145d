use std::fs;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use sgkit::experiments::{
    convergence, convergence_csv, normalize_k, random_lab, rm_params, sparsity_csv, sparsity_sweep, sse_compare,
    ConvergenceRun, SseComparison,
};
use sgkit::io::{from_json_str, load_json, sse_csv, GameDocument};
use sgkit::random_lab::{LabSelection, ModelKind, RandomGameModel};
use sgkit::BimatrixGame;

use crate::error::{config, CliResult};
use crate::output::json;
use crate::solve::zero_report_timing;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum Kind {
    Sparsity,
    Convergence,
    SseCompare,
    RandomLab,
}

/// Game files resolve against the config file's directory.
#[derive(Debug, Deserialize)]
struct SparsityConfig {
    games: Vec<PathBuf>,
    /// Largest support bound; absent means each game's Nash support.
    #[serde(default)]
    k_max: Option<usize>,
}

#[derive(Debug, Deserialize)]
struct ConvergenceConfig {
    games: Vec<PathBuf>,
    #[serde(default = "default_iterations")]
    iterations: usize,
    #[serde(default)]
    runtime_cap_s: Option<f64>,
    #[serde(default = "default_interval")]
    sample_interval: usize,
}

#[derive(Debug, Deserialize)]
struct SseCompareConfig {
    games: Vec<PathBuf>,
    /// Draws per baseline.
    #[serde(default = "default_count")]
    count: usize,
}

#[derive(Debug, Deserialize)]
struct RandomLabConfig {
    n: usize,
    samples: usize,
    #[serde(flatten)]
    kind: ModelKind,
    #[serde(default)]
    selection: Option<LabSelection>,
}

fn default_iterations() -> usize {
    10_000
}
fn default_interval() -> usize {
    5
}
fn default_count() -> usize {
    10
}

fn read_config<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|e| config(format!("cannot read {}: {e}", path.display())))?;
    Ok(from_json_str(&text, &path.display().to_string())?)
}

/// Instance name (file stem) and document for every listed game.
fn load_games(base: &Path, games: &[PathBuf]) -> CliResult<Vec<(String, GameDocument)>> {
    if games.is_empty() {
        return Err(config("experiment lists no games"));
    }
    games
        .iter()
        .map(|p| {
            let path = base.join(p);
            let name = path.file_stem().map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned());
            Ok((name, load_json(&path)?))
        })
        .collect()
}

fn zero_sum(name: &str, doc: &GameDocument) -> CliResult<BimatrixGame> {
    let g = doc.to_matrix()?;
    if !g.is_zero_sum() {
        return Err(config(format!("game {name} is not zero-sum")));
    }
    Ok(g)
}

fn require_seed(seed: Option<u64>, kind: &str) -> CliResult<u64> {
    seed.ok_or_else(|| config(format!("{kind} needs --seed")))
}

#[derive(Serialize)]
struct NamedComparison<'a> {
    instance: &'a str,
    #[serde(flatten)]
    comparison: &'a SseComparison,
}

#[derive(Serialize)]
struct NamedRuns<'a> {
    instance: &'a str,
    runs: &'a [ConvergenceRun],
}

pub fn run(kind: Kind, config_path: &Path, out: &Path, seed: Option<u64>, timing: bool) -> CliResult<()> {
    let base = config_path.parent().unwrap_or(Path::new("."));
    fs::create_dir_all(out)?;
    let write = |name: &str, text: &str| fs::write(out.join(name), text);
    match kind {
        Kind::Sparsity => {
            let cfg: SparsityConfig = read_config(config_path)?;
            let games = load_games(base, &cfg.games)?;
            let mut sweeps = games
                .par_iter()
                .map(|(name, doc)| Ok(sparsity_sweep(name, &zero_sum(name, doc)?.a, cfg.k_max)?))
                .collect::<CliResult<Vec<_>>>()?;
            normalize_k(&mut sweeps);
            if !timing {
                for p in sweeps.iter_mut().flat_map(|s| s.points.iter_mut()) {
                    p.runtime_s = 0.0;
                    p.r_norm = 0.0;
                }
            }
            write("sparsity.csv", &sparsity_csv(&sweeps)?)?;
            write("sparsity_summary.json", &json(&sweeps)?)?;
            println!("sparsity: {} instance(s)", sweeps.len());
        }
        Kind::Convergence => {
            let cfg: ConvergenceConfig = read_config(config_path)?;
            let games = load_games(base, &cfg.games)?;
            let params = rm_params(cfg.iterations, cfg.runtime_cap_s, cfg.sample_interval);
            let mut all = games
                .par_iter()
                .map(|(name, doc)| Ok((name.clone(), convergence(&zero_sum(name, doc)?.a, &params)?)))
                .collect::<CliResult<Vec<_>>>()?;
            if !timing {
                for r in all.iter_mut().flat_map(|(_, runs)| runs.iter_mut()) {
                    zero_report_timing(&mut r.report);
                }
            }
            let mut csv = String::new();
            for (i, (name, runs)) in all.iter().enumerate() {
                let part = convergence_csv(name, runs)?;
                // Keep one header line.
                csv.push_str(if i == 0 { &part } else { part.split_once('\n').map_or("", |(_, rest)| rest) });
            }
            let named: Vec<NamedRuns> = all.iter().map(|(n, r)| NamedRuns { instance: n, runs: r }).collect();
            write("convergence.csv", &csv)?;
            write("convergence_summary.json", &json(&named)?)?;
            println!("convergence: {} instance(s)", all.len());
        }
        Kind::SseCompare => {
            let seed = require_seed(seed, "sse_compare")?;
            let cfg: SseCompareConfig = read_config(config_path)?;
            let games = load_games(base, &cfg.games)?;
            let mut all = games
                .par_iter()
                .map(|(name, doc)| {
                    let sfg = doc.sfg.as_ref().ok_or_else(|| config(format!("game {name} is not schedule form")))?;
                    Ok((name.clone(), sse_compare(name, sfg, doc.general_sum, cfg.count, seed)?))
                })
                .collect::<CliResult<Vec<_>>>()?;
            if !timing {
                for (_, c) in &mut all {
                    c.real.runtime_s = 0.0;
                    for r in &mut c.rows {
                        r.runtime_s = 0.0;
                    }
                }
            }
            let rows: Vec<_> = all.iter().flat_map(|(_, c)| c.rows.iter().cloned()).collect();
            let named: Vec<NamedComparison> =
                all.iter().map(|(n, c)| NamedComparison { instance: n, comparison: c }).collect();
            write("sse.csv", &sse_csv(&rows)?)?;
            write("sse_summary.json", &json(&named)?)?;
            for (name, c) in &all {
                let medians: Vec<String> =
                    c.baselines.iter().map(|b| format!("{} {}", b.baseline.name(), b.support.median)).collect();
                println!("{name}: real support {} vs median {}", c.real.support, medians.join(", "));
            }
        }
        Kind::RandomLab => {
            let seed = require_seed(seed, "random_lab")?;
            let cfg: RandomLabConfig = read_config(config_path)?;
            let model = RandomGameModel { n: cfg.n, seed, kind: cfg.kind };
            let (report, csv) = random_lab(&model, cfg.samples, cfg.selection.unwrap_or_default())?;
            write("random_lab.csv", &csv)?;
            write("random_lab_summary.json", &json(&report)?)?;
            println!("random_lab: {} sample(s)", report.samples.len());
        }
    }
    Ok(())
}
