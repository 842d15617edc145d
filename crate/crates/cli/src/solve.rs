use std::path::Path;

use clap::ValueEnum;
use serde::Serialize;

use sgkit::io::{load_json, write_nfg, GameDocument};
use sgkit::schedule::ScheduleFormGame;
use sgkit::solvers::oracles::{double_oracle_nfg, double_oracle_sfg, BrMethod, GraphGameOracles, ScheduleOracles};
use sgkit::solvers::stackelberg::{sse_multiple_lp, sse_simple_sfg, CoverageSse, SseSolution};
use sgkit::solvers::zero_sum::{nash_lp, regret_matching, sparse_nash_milp, RmParams, RmVariant};
use sgkit::{BimatrixGame, SolveReport};

use crate::error::{config, CliResult};
use crate::output::{emit, json};
use crate::Format;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum SolverName {
    NashLp,
    SparseMilp,
    DoNfg,
    DoSfg,
    Rm,
    RmPlus,
    PrmPlus,
    SseGeneral,
    SseSimple,
}

pub struct Options {
    pub k: usize,
    pub iterations: usize,
    pub runtime_cap: Option<f64>,
    pub sample_interval: usize,
    pub eps: f64,
    pub timing: bool,
}

#[derive(Debug, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum Solution {
    ZeroSum { report: SolveReport },
    Stackelberg { solution: SseSolution },
    Coverage { solution: CoverageSse },
}

#[derive(Debug, Serialize)]
struct SolveOutput {
    solver: SolverName,
    /// Row player's (defender's) payoff.
    value: f64,
    /// True when `value` is in units of a matrix scaled to max |a| = 1. The
    /// double-oracle and coverage solvers always report raw payoffs.
    normalized: bool,
    #[serde(flatten)]
    solution: Solution,
}

pub fn zero_report_timing(r: &mut SolveReport) {
    r.wall_time_s = 0.0;
    for s in &mut r.gap_trace {
        s.time_s = 0.0;
    }
}

fn zero_sum_matrix(doc: &GameDocument, solver: SolverName) -> CliResult<BimatrixGame> {
    let g = doc.to_matrix()?;
    if !g.is_zero_sum() {
        return Err(config(format!("{} needs a zero-sum game; use sse_general", solver.name())));
    }
    Ok(g)
}

fn sfg(doc: &GameDocument, solver: SolverName) -> CliResult<&ScheduleFormGame> {
    doc.sfg.as_ref().ok_or_else(|| config(format!("{} needs a schedule-form game", solver.name())))
}

impl SolverName {
    fn name(self) -> &'static str {
        match self {
            SolverName::NashLp => "nash_lp",
            SolverName::SparseMilp => "sparse_milp",
            SolverName::DoNfg => "do_nfg",
            SolverName::DoSfg => "do_sfg",
            SolverName::Rm => "rm",
            SolverName::RmPlus => "rm_plus",
            SolverName::PrmPlus => "prm_plus",
            SolverName::SseGeneral => "sse_general",
            SolverName::SseSimple => "sse_simple",
        }
    }
}

fn solve(doc: &GameDocument, solver: SolverName, o: &Options) -> CliResult<SolveOutput> {
    let mut normalized = false;
    let mut zero_sum_matrix = |doc: &GameDocument, solver| -> CliResult<BimatrixGame> {
        let g = zero_sum_matrix(doc, solver)?;
        normalized = g.normalized;
        Ok(g)
    };
    let rm = |variant, a: &BimatrixGame| -> CliResult<Solution> {
        let params = RmParams {
            iterations: o.iterations,
            runtime_cap: o.runtime_cap.map(std::time::Duration::from_secs_f64),
            sample_interval: o.sample_interval,
        };
        Ok(Solution::ZeroSum { report: regret_matching(&a.a, variant, &params)? })
    };
    let solution = match solver {
        SolverName::NashLp => Solution::ZeroSum { report: nash_lp(&zero_sum_matrix(doc, solver)?.a)? },
        SolverName::SparseMilp => Solution::ZeroSum { report: sparse_nash_milp(&zero_sum_matrix(doc, solver)?.a, o.k)? },
        SolverName::Rm => rm(RmVariant::Rm, &zero_sum_matrix(doc, solver)?)?,
        SolverName::RmPlus => rm(RmVariant::RmPlus, &zero_sum_matrix(doc, solver)?)?,
        SolverName::PrmPlus => rm(RmVariant::PrmPlus, &zero_sum_matrix(doc, solver)?)?,
        SolverName::DoNfg => {
            if doc.sfg.is_some() || doc.general_sum {
                return Err(config("do_nfg needs a zero-sum normal-form graph game"));
            }
            let gg = doc.graph_game()?;
            let oracles = GraphGameOracles::new(&gg.graph, &gg.config, &gg.targets, gg.protocol, BrMethod::Auto)?;
            Solution::ZeroSum { report: double_oracle_nfg(&oracles, o.eps)?.report }
        }
        SolverName::DoSfg => {
            if doc.general_sum {
                return Err(config("do_sfg needs a zero-sum schedule-form game"));
            }
            let oracles = ScheduleOracles::new(sfg(doc, solver)?, BrMethod::Auto);
            Solution::ZeroSum { report: double_oracle_sfg(&oracles, o.eps)?.report }
        }
        SolverName::SseGeneral => {
            let g = doc.to_matrix()?;
            normalized = g.normalized;
            Solution::Stackelberg { solution: sse_multiple_lp(&g)? }
        }
        SolverName::SseSimple => {
            let s = sfg(doc, solver)?;
            if !s.is_singleton() {
                return Err(config("sse_simple needs singleton schedules; use sse_general"));
            }
            Solution::Coverage { solution: sse_simple_sfg(s)? }
        }
    };
    let mut out = SolveOutput {
        solver,
        value: match &solution {
            Solution::ZeroSum { report } => report.value,
            Solution::Stackelberg { solution } => solution.value,
            Solution::Coverage { solution } => solution.value,
        },
        normalized,
        solution,
    };
    if !o.timing {
        match &mut out.solution {
            Solution::ZeroSum { report } => zero_report_timing(report),
            Solution::Stackelberg { solution } => solution.runtime_s = 0.0,
            Solution::Coverage { solution } => solution.runtime_s = 0.0,
        }
    }
    Ok(out)
}

/// `player,index,probability` rows for every strategy in the result.
fn strategy_csv(out: &SolveOutput) -> String {
    let mut rows: Vec<(&str, &[f64])> = Vec::new();
    match &out.solution {
        Solution::ZeroSum { report } => {
            rows.push(("row", report.row.probs()));
            rows.push(("col", report.col.probs()));
        }
        Solution::Stackelberg { solution } => rows.push(("leader", solution.leader.probs())),
        Solution::Coverage { solution } => rows.push(("coverage", &solution.coverage)),
    }
    let mut s = String::from("player,index,probability\n");
    for (player, probs) in rows {
        for (i, p) in probs.iter().enumerate() {
            s.push_str(&format!("{player},{i},{p}\n"));
        }
    }
    s
}

fn support(out: &SolveOutput) -> usize {
    match &out.solution {
        Solution::ZeroSum { report } => report.row.support_size(),
        Solution::Stackelberg { solution } => solution.support,
        Solution::Coverage { solution } => solution.support,
    }
}

pub fn run(game: &Path, solver: SolverName, format: Format, out: Option<&Path>, o: &Options) -> CliResult<()> {
    if format == Format::Nfg {
        return Err(config("solve writes json or csv; use export-nfg for .nfg files"));
    }
    let doc: GameDocument = load_json(game)?;
    let result = solve(&doc, solver, o)?;
    let text = match format {
        Format::Json => json(&result)?,
        _ => strategy_csv(&result),
    };
    emit(out, &text)?;
    eprintln!("{} value {} support {}", solver.name(), result.value, support(&result));
    Ok(())
}

pub fn export_nfg(game: &Path, out: Option<&Path>, title: Option<String>) -> CliResult<()> {
    let doc: GameDocument = load_json(game)?;
    let title = title.or(doc.title.clone()).unwrap_or_else(|| "sgkit game".into());
    emit(out, &write_nfg(&doc.to_matrix()?, &title)?)
}
