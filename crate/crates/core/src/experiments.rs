//! Experiment drivers: support-bounded sparsity sweeps, iterative-solver
//! convergence traces, Stackelberg comparisons against randomized
//! baselines, and random-game degeneracy runs.

use std::time::Duration;

use itertools::Itertools;
use ndarray::Array2;
use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::instance::randomize_target_values;
use crate::io::{into_string, SseRow};
use crate::matrix::BimatrixGame;
use crate::random_lab::{degeneracy_report, sample_rng, DegeneracyReport, LabSelection, RandomGameModel, Summary};
use crate::schedule::{schedule_game_matrix, Schedule, ScheduleFormGame};
use crate::solvers::stackelberg::{sse_multiple_lp, sse_simple_sfg};
use crate::solvers::zero_sum::{double_oracle_matrix, nash_lp, regret_matching, sparse_nash_milp, RmParams, RmVariant, DO_EPSILON};
use crate::strategy::SolveReport;

/// Denominators at or below this count as zero in the normalisations.
pub const NORM_EPS: f64 = 1e-12;

/// Uniform redraw of every payoff within the range of the original matrix
/// it belongs to. Zero-sum games stay zero-sum.
pub fn randomize_matrix<R: Rng>(game: &BimatrixGame, rng: &mut R) -> Result<BimatrixGame> {
    let redraw = |m: &Array2<f64>, rng: &mut R| {
        let lo = m.fold(f64::INFINITY, |a, &v| a.min(v));
        let hi = m.fold(f64::NEG_INFINITY, |a, &v| a.max(v));
        Array2::from_shape_simple_fn(m.dim(), || if hi > lo { rng.gen_range(lo..=hi) } else { lo })
    };
    if game.is_zero_sum() {
        BimatrixGame::zero_sum(redraw(&game.a, rng))
    } else {
        let a = redraw(&game.a, rng);
        let b = redraw(&game.b, rng);
        BimatrixGame::new(a, b)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparsityPoint {
    pub k: usize,
    pub value: f64,
    pub runtime_s: f64,
    pub support: usize,
    /// `None` when the Nash and pure values coincide.
    pub u_norm: Option<f64>,
    pub u_norm_undefined: bool,
    pub r_norm: f64,
    pub k_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparsitySweep {
    pub instance: String,
    pub nash_value: f64,
    pub nash_support: usize,
    pub points: Vec<SparsityPoint>,
}

/// Runs the support-bounded solver for `k = 1..=k_max` (the Nash support
/// when `None`) and fills the utility and runtime normalisations.
/// `k_norm` uses this instance's Nash support until [`normalize_k`] runs.
pub fn sparsity_sweep(instance: &str, a: &Array2<f64>, k_max: Option<usize>) -> Result<SparsitySweep> {
    let nash = nash_lp(a)?;
    let nash_support = nash.row.support_size();
    let k_max = k_max.unwrap_or(nash_support).clamp(1, a.nrows());
    let mut points = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        let r = sparse_nash_milp(a, k)?;
        points.push(SparsityPoint {
            k,
            value: r.value,
            runtime_s: r.wall_time_s,
            support: r.row.support_size(),
            u_norm: None,
            u_norm_undefined: false,
            r_norm: 0.0,
            k_norm: 0.0,
        });
    }
    let u1 = points[0].value;
    let r_min = points.iter().map(|p| p.runtime_s).fold(f64::INFINITY, f64::min);
    let r_max = points.iter().map(|p| p.runtime_s).fold(f64::NEG_INFINITY, f64::max);
    for p in &mut points {
        let den = nash.value - u1;
        if den.abs() <= NORM_EPS {
            p.u_norm_undefined = true;
        } else {
            p.u_norm = Some((p.value - u1) / den);
        }
        p.r_norm = if r_max - r_min > 0.0 { (p.runtime_s - r_min) / (r_max - r_min) } else { 0.0 };
    }
    let mut sweep = SparsitySweep { instance: instance.to_string(), nash_value: nash.value, nash_support, points };
    normalize_k(std::slice::from_mut(&mut sweep));
    Ok(sweep)
}

/// Sets `k_norm = k / k_max_nash` with the largest Nash support across all
/// sweeps.
pub fn normalize_k(sweeps: &mut [SparsitySweep]) {
    let k_max_nash = sweeps.iter().map(|s| s.nash_support).max().unwrap_or(1).max(1);
    for s in sweeps {
        for p in &mut s.points {
            p.k_norm = p.k as f64 / k_max_nash as f64;
        }
    }
}

pub fn sparsity_csv(sweeps: &[SparsitySweep]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["instance", "k", "value", "runtime_s", "support", "u_norm", "u_norm_undefined", "r_norm", "k_norm"])?;
    for s in sweeps {
        for p in &s.points {
            w.write_record([
                s.instance.clone(),
                p.k.to_string(),
                p.value.to_string(),
                p.runtime_s.to_string(),
                p.support.to_string(),
                p.u_norm.map_or_else(|| "null".to_string(), |u| u.to_string()),
                p.u_norm_undefined.to_string(),
                p.r_norm.to_string(),
                p.k_norm.to_string(),
            ])?;
        }
    }
    into_string(w)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRun {
    pub algorithm: String,
    pub report: SolveReport,
}

/// Double oracle and the three regret-matching variants on one zero-sum
/// matrix.
pub fn convergence(a: &Array2<f64>, params: &RmParams) -> Result<Vec<ConvergenceRun>> {
    let mut runs = vec![ConvergenceRun { algorithm: "do".into(), report: double_oracle_matrix(a, DO_EPSILON)? }];
    for (name, v) in [("rm", RmVariant::Rm), ("rm_plus", RmVariant::RmPlus), ("prm_plus", RmVariant::PrmPlus)] {
        runs.push(ConvergenceRun { algorithm: name.into(), report: regret_matching(a, v, params)? });
    }
    Ok(runs)
}

pub fn convergence_csv(instance: &str, runs: &[ConvergenceRun]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["instance", "algorithm", "iteration", "time_s", "gap"])?;
    for r in runs {
        for s in &r.report.gap_trace {
            w.write_record([
                instance.to_string(),
                r.algorithm.clone(),
                s.iteration.to_string(),
                s.time_s.to_string(),
                s.gap.to_string(),
            ])?;
        }
    }
    into_string(w)
}

/// Defender value, runtime and support of one Stackelberg solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SseOutcome {
    pub u_d: f64,
    pub runtime_s: f64,
    pub support: usize,
}

/// Coverage LP for singleton schedules, otherwise the multiple-LP method on
/// the expanded joint-schedule matrix.
pub fn solve_sfg_sse(sfg: &ScheduleFormGame) -> Result<SseOutcome> {
    if sfg.is_singleton() {
        let s = sse_simple_sfg(sfg)?;
        return Ok(SseOutcome { u_d: s.value, runtime_s: s.runtime_s, support: s.support });
    }
    let s = sse_multiple_lp(&schedule_game_matrix(sfg, true)?)?;
    Ok(SseOutcome { u_d: s.value, runtime_s: s.runtime_s, support: s.support })
}

/// Replaces every defender's schedules with as many random target sets,
/// each of size `ceil(mean real schedule size)` and costing the mean real
/// schedule cost.
pub fn randomize_schedules<R: Rng>(sfg: &ScheduleFormGame, rng: &mut R) -> Result<Vec<Vec<Schedule>>> {
    let all: Vec<&Schedule> = sfg.schedules.iter().flatten().filter(|s| !s.is_idle()).collect();
    if all.is_empty() {
        return Ok(sfg.schedules.clone());
    }
    let mean_len = all.iter().map(|s| s.targets.len()).sum::<usize>() as f64 / all.len() as f64;
    let size = (mean_len.ceil() as usize).clamp(1, sfg.targets.len());
    let steps = (all.iter().map(|s| s.movement_steps).sum::<usize>() as f64 / all.len() as f64).round() as usize;
    let cost = all.iter().map(|s| s.movement_cost).sum::<f64>() / all.len() as f64;
    Ok(sfg
        .schedules
        .iter()
        .map(|list| {
            (0..list.len())
                .map(|_| Schedule {
                    targets: sample(rng, sfg.targets.len(), size).iter().map(|i| sfg.targets[i].node_id).collect(),
                    movement_steps: steps,
                    movement_cost: cost,
                })
                .collect()
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Baseline {
    /// Expanded matrices redrawn within their payoff ranges.
    Rm,
    /// Target payoffs redrawn; schedules kept.
    Rt,
    /// Target payoffs and schedules redrawn.
    Rts,
}

impl Baseline {
    pub const ALL: [Baseline; 3] = [Baseline::Rm, Baseline::Rt, Baseline::Rts];

    pub fn name(self) -> &'static str {
        match self {
            Baseline::Rm => "rm",
            Baseline::Rt => "rt",
            Baseline::Rts => "rts",
        }
    }

    fn stream(self, i: usize) -> u64 {
        (self as u64) << 32 | i as u64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineSummary {
    pub baseline: Baseline,
    pub u_d: Summary,
    pub support: Summary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SseComparison {
    pub real: SseOutcome,
    pub rows: Vec<SseRow>,
    pub baselines: Vec<BaselineSummary>,
}

/// One randomized instance of `baseline`, drawn from stream `i`.
pub fn baseline_sse(sfg: &ScheduleFormGame, general_sum: bool, baseline: Baseline, seed: u64, i: usize) -> Result<SseOutcome> {
    let mut rng = sample_rng(seed, baseline.stream(i));
    match baseline {
        Baseline::Rm => {
            let g = randomize_matrix(&schedule_game_matrix(sfg, true)?, &mut rng)?;
            let s = sse_multiple_lp(&g)?;
            Ok(SseOutcome { u_d: s.value, runtime_s: s.runtime_s, support: s.support })
        }
        Baseline::Rt => {
            let targets = randomize_target_values(&sfg.targets, !general_sum, &mut rng);
            solve_sfg_sse(&ScheduleFormGame::from_schedules(targets, sfg.schedules.clone())?)
        }
        Baseline::Rts => {
            let targets = randomize_target_values(&sfg.targets, !general_sum, &mut rng);
            let schedules = randomize_schedules(sfg, &mut rng)?;
            solve_sfg_sse(&ScheduleFormGame::from_schedules(targets, schedules)?)
        }
    }
}

/// Real instance against `count` draws of every baseline.
pub fn sse_compare(instance: &str, sfg: &ScheduleFormGame, general_sum: bool, count: usize, seed: u64) -> Result<SseComparison> {
    if count == 0 {
        return Err(invalid("need at least one baseline draw"));
    }
    let form = if sfg.is_singleton() { "simple" } else { "general" };
    let real = solve_sfg_sse(sfg)?;
    let row = |name: String, o: &SseOutcome| SseRow {
        instance: name,
        form: form.to_string(),
        u_d: o.u_d,
        runtime_s: o.runtime_s,
        support: o.support as f64,
    };
    let mut rows = vec![row(format!("{instance}/real"), &real)];
    let mut baselines = Vec::new();
    for b in Baseline::ALL {
        let outs: Vec<SseOutcome> = (0..count).map(|i| baseline_sse(sfg, general_sum, b, seed, i)).try_collect()?;
        rows.extend(outs.iter().enumerate().map(|(i, o)| row(format!("{instance}/{}/{i}", b.name()), o)));
        let u: Vec<f64> = outs.iter().map(|o| o.u_d).collect();
        let s: Vec<f64> = outs.iter().map(|o| o.support as f64).collect();
        baselines.push(BaselineSummary {
            baseline: b,
            u_d: Summary::of(&u).ok_or(Error::SolverFailure("empty baseline"))?,
            support: Summary::of(&s).ok_or(Error::SolverFailure("empty baseline"))?,
        });
    }
    Ok(SseComparison { real, rows, baselines })
}

/// Degeneracy statistics plus per-sample CSV.
pub fn random_lab(model: &RandomGameModel, samples: usize, selection: LabSelection) -> Result<(DegeneracyReport, String)> {
    let report = degeneracy_report(model, samples, selection)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    for s in &report.samples {
        w.serialize(s)?;
    }
    let csv = into_string(w)?;
    Ok((report, csv))
}

/// Iterative-solver parameters with an optional wall-clock cap in seconds.
pub fn rm_params(iterations: usize, runtime_cap_s: Option<f64>, sample_interval: usize) -> RmParams {
    RmParams { iterations, runtime_cap: runtime_cap_s.map(Duration::from_secs_f64), sample_interval }
}
