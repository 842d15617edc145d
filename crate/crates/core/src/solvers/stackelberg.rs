//! Strong Stackelberg equilibria with the row player as leader.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sgkit_lp::{solve_lp, LinearProgram, LpOutcome, Relation, Sense};

use crate::error::{invalid, Error, Result};
use crate::game::TargetSpec;
use crate::graph::NodeId;
use crate::matrix::BimatrixGame;
use crate::schedule::ScheduleFormGame;
use crate::strategy::{MixedStrategy, SUPPORT_EPS};

/// Leader values within this distance count as tied.
pub const TIE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SseSolution {
    pub leader: MixedStrategy,
    pub follower: usize,
    pub value: f64,
    pub support: usize,
    pub runtime_s: f64,
    /// Number of follower columns attaining the optimal value.
    pub tied_columns: usize,
}

/// Leader LP for inducing column `j`: maximise `x^T A e_j` subject to `j`
/// being a follower best response. `None` when `j` cannot be induced.
fn induce(a: &Array2<f64>, b: &Array2<f64>, rows: &[usize], j: usize) -> Result<Option<(f64, Vec<f64>)>> {
    let m = a.ncols();
    let obj: Vec<f64> = rows.iter().map(|&i| a[[i, j]]).collect();
    let mut lp = LinearProgram::new(Sense::Maximize, obj);
    for jp in (0..m).filter(|&jp| jp != j) {
        let terms = rows.iter().enumerate().map(|(k, &i)| (k, b[[i, jp]] - b[[i, j]])).collect();
        lp.add_terms(terms, Relation::Le, 0.0);
    }
    lp.add_terms((0..rows.len()).map(|k| (k, 1.0)).collect(), Relation::Eq, 1.0);
    match solve_lp(&lp)? {
        LpOutcome::Optimal(s) => Ok(Some((s.value, s.x))),
        LpOutcome::Infeasible => Ok(None),
        LpOutcome::Unbounded => Err(Error::SolverFailure("unbounded leader program")),
    }
}

/// One LP per follower column, keeping the best. Ties within 1e-9 go to the
/// lowest column and are counted in `tied_columns`.
pub fn sse_multiple_lp(game: &BimatrixGame) -> Result<SseSolution> {
    let rows: Vec<usize> = (0..game.rows()).collect();
    sse_restricted(game, &rows)
}

/// Leader restricted to mixing over `rows`; the follower keeps every column.
pub fn sse_restricted(game: &BimatrixGame, rows: &[usize]) -> Result<SseSolution> {
    if rows.is_empty() {
        return Err(invalid("leader needs at least one row"));
    }
    let start = Instant::now();
    let n = game.rows();
    let per_col: Vec<Option<(f64, Vec<f64>)>> = (0..game.cols())
        .into_par_iter()
        .map(|j| induce(&game.a, &game.b, rows, j))
        .collect::<Result<_>>()?;
    let best = per_col
        .iter()
        .enumerate()
        .filter_map(|(j, s)| s.as_ref().map(|(v, _)| (j, *v)))
        .fold(None, |acc: Option<(usize, f64)>, (j, v)| match acc {
            Some((_, bv)) if v <= bv + TIE_EPS => acc,
            _ => Some((j, v)),
        })
        .ok_or(Error::SolverFailure("no inducible follower column"))?;
    let (j, value) = best;
    let tied_columns = per_col
        .iter()
        .filter(|s| s.as_ref().is_some_and(|(v, _)| (v - value).abs() <= TIE_EPS))
        .count();
    let x = &per_col[j].as_ref().expect("best column is feasible").1;
    let leader = MixedStrategy::new(x.clone())?.lift(rows, n);
    Ok(SseSolution {
        support: leader.support_size(),
        leader,
        follower: j,
        value,
        runtime_s: start.elapsed().as_secs_f64(),
        tied_columns,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageSse {
    pub coverage: Vec<f64>,
    pub attacked: usize,
    pub value: f64,
    pub support: usize,
    pub runtime_s: f64,
}

/// Coverage-space SSE when every schedule is a single target: per target,
/// maximise the defender's payoff there while keeping it the attacker's
/// best target, with `sum c <= resources` and `0 <= c <= 1`.
pub fn sse_simple_schedules(targets: &[TargetSpec], resources: f64) -> Result<CoverageSse> {
    if !(resources > 0.0) {
        return Err(invalid("resources must be > 0"));
    }
    let k = targets.len();
    coverage_sse(targets, 0, &|lp: &mut LinearProgram| {
        lp.add_terms((0..k).map(|i| (i, 1.0)).collect(), Relation::Le, resources);
    })
}

/// Coverage SSE of a singleton schedule-form game. Defender `d` spreads one
/// unit of coverage over the targets its schedules reach, so reachability
/// differences between defenders are respected exactly.
pub fn sse_simple_sfg(sfg: &ScheduleFormGame) -> Result<CoverageSse> {
    if !sfg.is_singleton() {
        return Err(Error::Unsupported("coverage SSE needs singleton schedules".into()));
    }
    let k = sfg.targets.len();
    let index: BTreeMap<NodeId, usize> = sfg.targets.iter().enumerate().map(|(i, t)| (t.node_id, i)).collect();
    // One flow variable per reachable (defender, target) pair.
    let mut flows: Vec<(usize, usize)> = Vec::new();
    for (d, list) in sfg.schedules.iter().enumerate() {
        let reach: BTreeSet<usize> = list.iter().flat_map(|s| s.targets.iter()).filter_map(|v| index.get(v).copied()).collect();
        flows.extend(reach.into_iter().map(|t| (d, t)));
    }
    coverage_sse(&sfg.targets, flows.len(), &|lp: &mut LinearProgram| {
        for t in 0..k {
            let mut terms: Vec<(usize, f64)> =
                flows.iter().enumerate().filter(|(_, f)| f.1 == t).map(|(e, _)| (k + e, -1.0)).collect();
            terms.push((t, 1.0));
            lp.add_terms(terms, Relation::Eq, 0.0);
        }
        for d in 0..sfg.num_defenders() {
            let terms: Vec<(usize, f64)> =
                flows.iter().enumerate().filter(|(_, f)| f.0 == d).map(|(e, _)| (k + e, 1.0)).collect();
            if !terms.is_empty() {
                lp.add_terms(terms, Relation::Le, 1.0);
            }
        }
    })
}

/// Multiple-LP search over attacked targets. Coverage occupies variables
/// `0..k`; `add` appends the resource constraints over `extra` further
/// nonnegative variables.
fn coverage_sse(targets: &[TargetSpec], extra: usize, add: &(dyn Fn(&mut LinearProgram) + Sync)) -> Result<CoverageSse> {
    if targets.is_empty() {
        return Err(invalid("no targets"));
    }
    let start = Instant::now();
    let k = targets.len();
    let solve = |t: usize| -> Result<Option<(f64, Vec<f64>)>> {
        let tt = &targets[t];
        let mut obj = vec![0.0; k + extra];
        obj[t] = tt.u_d_covered - tt.u_d_uncovered;
        let mut lp = LinearProgram::new(Sense::Maximize, obj);
        for i in 0..k {
            lp.set_bounds(i, 0.0, 1.0);
        }
        add(&mut lp);
        // Attacker value at t' minus value at t must be <= 0.
        let da_t = tt.u_a_covered - tt.u_a_uncovered;
        for (tp, o) in targets.iter().enumerate().filter(|(tp, _)| *tp != t) {
            let da = o.u_a_covered - o.u_a_uncovered;
            lp.add_terms(vec![(tp, da), (t, -da_t)], Relation::Le, tt.u_a_uncovered - o.u_a_uncovered);
        }
        match solve_lp(&lp)? {
            LpOutcome::Optimal(s) => Ok(Some((s.value + tt.u_d_uncovered, s.x))),
            LpOutcome::Infeasible => Ok(None),
            LpOutcome::Unbounded => Err(Error::SolverFailure("unbounded coverage program")),
        }
    };
    let mut best: Option<(usize, f64, Vec<f64>)> = None;
    for t in 0..k {
        if let Some((v, c)) = solve(t)? {
            if best.as_ref().map_or(true, |(_, bv, _)| v > bv + TIE_EPS) {
                best = Some((t, v, c));
            }
        }
    }
    let (attacked, value, x) = best.ok_or(Error::SolverFailure("no target can be induced"))?;
    let coverage: Vec<f64> = x[..k].iter().map(|c| c.clamp(0.0, 1.0)).collect();
    Ok(CoverageSse {
        support: coverage.iter().filter(|c| **c > SUPPORT_EPS).count(),
        coverage,
        attacked,
        value,
        runtime_s: start.elapsed().as_secs_f64(),
    })
}

/// Largest leader SSE value by enumerating every vertex of each follower
/// column's best-response region. Independent of any LP code; games up to
/// 4x4 only.
pub fn sse_bruteforce_oracle(a: &Array2<f64>, b: &Array2<f64>) -> Result<f64> {
    let (n, m) = a.dim();
    if n == 0 || m == 0 {
        return Err(Error::EmptyMatrix);
    }
    if n > 4 || m > 4 || b.dim() != (n, m) {
        return Err(Error::SizeCap(format!("brute-force oracle supports up to 4x4, got {n}x{m}")));
    }
    let mut best = f64::NEG_INFINITY;
    for j in 0..m {
        // Half-spaces g.x <= 0: follower incentives, then x_i >= 0.
        let mut halfspaces: Vec<Vec<f64>> = (0..m)
            .filter(|&jp| jp != j)
            .map(|jp| (0..n).map(|i| b[[i, jp]] - b[[i, j]]).collect())
            .collect();
        for i in 0..n {
            let mut g = vec![0.0; n];
            g[i] = -1.0;
            halfspaces.push(g);
        }
        for tight in combinations(halfspaces.len(), n - 1) {
            let mut rows: Vec<Vec<f64>> = tight.iter().map(|&h| halfspaces[h].clone()).collect();
            let mut rhs = vec![0.0; n - 1];
            rows.push(vec![1.0; n]);
            rhs.push(1.0);
            let Some(x) = gauss(rows, rhs) else { continue };
            let feasible = halfspaces
                .iter()
                .all(|g| g.iter().zip(&x).map(|(p, q)| p * q).sum::<f64>() <= 1e-9);
            if feasible {
                let v: f64 = (0..n).map(|i| x[i] * a[[i, j]]).sum();
                best = best.max(v);
            }
        }
    }
    Ok(best)
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

/// Solves a square system by elimination with partial pivoting; `None` when
/// singular.
fn gauss(mut m: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Option<Vec<f64>> {
    let n = rhs.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&p, &q| m[p][col].abs().total_cmp(&m[q][col].abs()))?;
        if m[piv][col].abs() < 1e-12 {
            return None;
        }
        m.swap(col, piv);
        rhs.swap(col, piv);
        for r in 0..n {
            if r != col {
                let f = m[r][col] / m[col][col];
                if f != 0.0 {
                    for c in col..n {
                        m[r][c] -= f * m[col][c];
                    }
                    rhs[r] -= f * rhs[col];
                }
            }
        }
    }
    Some((0..n).map(|i| rhs[i] / m[i][i]).collect())
}
