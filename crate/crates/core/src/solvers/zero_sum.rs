//! Zero-sum equilibrium computation. The row player maximises `x^T A y`.

use std::collections::HashMap;
use std::hash::Hash;
use std::time::{Duration, Instant};

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};
use sgkit_lp::{solve_lp, solve_mip_with, LinearProgram, LpOutcome, LpSolution, MipOptions, MipProgram, Relation, Sense};

use crate::error::{invalid, Error, Result};
use crate::matrix::{col_values, duality_gap, row_values};
use crate::strategy::{GapSample, MixedStrategy, SolveReport, StopReason};

fn check_matrix(a: &Array2<f64>) -> Result<()> {
    if a.is_empty() {
        return Err(Error::EmptyMatrix);
    }
    if let Some(((i, j), _)) = a.indexed_iter().find(|(_, v)| !v.is_finite()) {
        return Err(Error::NonFinitePayoff(i, j));
    }
    Ok(())
}

fn optimal(out: LpOutcome) -> Result<LpSolution> {
    match out {
        LpOutcome::Optimal(s) => Ok(s),
        LpOutcome::Infeasible => Err(Error::SolverFailure("infeasible")),
        LpOutcome::Unbounded => Err(Error::SolverFailure("unbounded")),
    }
}

/// `max v` subject to `v <= (x^T A)_j` for every column, over the simplex.
/// Variables are `x_0..x_{n-1}, v`.
fn maximin_lp(a: &Array2<f64>) -> LinearProgram {
    let (n, m) = a.dim();
    let mut obj = vec![0.0; n + 1];
    obj[n] = 1.0;
    let mut lp = LinearProgram::new(Sense::Maximize, obj);
    lp.set_free(n);
    for j in 0..m {
        let mut terms: Vec<(usize, f64)> = (0..n).map(|i| (i, -a[[i, j]])).collect();
        terms.push((n, 1.0));
        lp.add_terms(terms, Relation::Le, 0.0);
    }
    lp.add_terms((0..n).map(|i| (i, 1.0)).collect(), Relation::Eq, 1.0);
    lp
}

fn maximin(a: &Array2<f64>) -> Result<(f64, MixedStrategy)> {
    let n = a.nrows();
    let s = optimal(solve_lp(&maximin_lp(a))?)?;
    Ok((s.value, MixedStrategy::new(s.x[..n].to_vec())?))
}

/// Minimax strategies for both players from two independent LPs. The
/// reported value is the row player's guarantee; the column LP certifies it.
pub fn nash_lp(a: &Array2<f64>) -> Result<SolveReport> {
    check_matrix(a)?;
    let start = Instant::now();
    let (v_row, x) = maximin(a)?;
    let neg_t = a.t().mapv(|v| -v);
    let (neg_v_col, y) = maximin(&neg_t)?;
    let v_col = -neg_v_col;
    let scale = 1.0 + v_row.abs();
    if (v_row - v_col).abs() > 1e-7 * scale {
        log::warn!("maximin {v_row} and minimax {v_col} disagree");
        return Err(Error::SolverFailure("minimax mismatch"));
    }
    Ok(SolveReport {
        value: v_row,
        row: x,
        col: y,
        iterations: 1,
        wall_time_s: start.elapsed().as_secs_f64(),
        gap_trace: Vec::new(),
        stop: StopReason::Optimal,
    })
}

/// Best row guarantee among strategies with at most `k` support rows, via
/// binary support indicators `x_i <= y_i`, `sum y <= k`.
pub fn sparse_nash_milp(a: &Array2<f64>, k: usize) -> Result<SolveReport> {
    check_matrix(a)?;
    let (n, m) = a.dim();
    if k < 1 || k > n {
        return Err(invalid(format!("support bound k = {k} outside 1..={n}")));
    }
    let start = Instant::now();
    let full = nash_lp(a)?;
    if full.row.support_size() <= k {
        return Ok(SolveReport { wall_time_s: start.elapsed().as_secs_f64(), ..full });
    }

    let kept = undominated_rows(a);
    if kept.len() < n {
        let sub = a.select(ndarray::Axis(0), &kept);
        let r = sparse_nash_milp(&sub, k.min(kept.len()))?;
        let row = r.row.lift(&kept, n);
        return Ok(SolveReport { row, wall_time_s: start.elapsed().as_secs_f64(), ..r });
    }

    // Variables: x (n), y (n, binary), v.
    let v = 2 * n;
    let mut obj = vec![0.0; 2 * n + 1];
    obj[v] = 1.0;
    let mut lp = LinearProgram::new(Sense::Maximize, obj);
    lp.set_free(v);
    for j in 0..m {
        let mut terms: Vec<(usize, f64)> = (0..n).map(|i| (i, -a[[i, j]])).collect();
        terms.push((v, 1.0));
        lp.add_terms(terms, Relation::Le, 0.0);
    }
    lp.add_terms((0..n).map(|i| (i, 1.0)).collect(), Relation::Eq, 1.0);
    for i in 0..n {
        lp.add_terms(vec![(i, 1.0), (n + i, -1.0)], Relation::Le, 0.0);
        lp.set_bounds(n + i, 0.0, 1.0);
    }
    lp.add_terms((0..n).map(|i| (n + i, 1.0)).collect(), Relation::Le, k as f64);

    let incumbent = greedy_sparse(a, &full.row, k)?;
    let mut x0 = vec![0.0; 2 * n + 1];
    for (i, p) in incumbent.1.probs().iter().enumerate() {
        x0[i] = *p;
    }
    for i in incumbent.1.support().into_iter().chain(std::iter::repeat(0)).take(k) {
        x0[n + i] = 1.0;
    }
    x0[v] = incumbent.0;
    let options = MipOptions {
        incumbent: Some(LpSolution { value: incumbent.0, x: x0 }),
        node_limit: None,
    };
    let sol = optimal(solve_mip_with(&MipProgram::new(lp, (n..2 * n).collect()), &options)?)?;
    let x = MixedStrategy::new(sol.x[..n].to_vec())?;
    let value = col_values(a, x.view()).fold(f64::INFINITY, |acc, &c| acc.min(c));
    let rows = x.support();
    let sub = a.select(ndarray::Axis(0), &rows);
    let y = nash_lp(&sub)?.col;
    Ok(SolveReport {
        value,
        row: x,
        col: y,
        iterations: 1,
        wall_time_s: start.elapsed().as_secs_f64(),
        gap_trace: Vec::new(),
        stop: StopReason::Optimal,
    })
}

/// Rows not weakly dominated by another row; of identical rows the first is
/// kept. Moving a dominated row's weight onto its dominator never grows the
/// support or lowers a column value, so the k-sparse optimum is unchanged.
fn undominated_rows(a: &Array2<f64>) -> Vec<usize> {
    let n = a.nrows();
    let dominates = |p: usize, q: usize| a.row(p).iter().zip(a.row(q)).all(|(x, y)| x >= y);
    (0..n)
        .filter(|&i| {
            !(0..n).any(|p| p != i && dominates(p, i) && (p < i || !dominates(i, p)))
        })
        .collect()
}

/// Feasible k-sparse start: the best of the top-k Nash rows restricted game
/// and the best pure row.
fn greedy_sparse(a: &Array2<f64>, nash: &MixedStrategy, k: usize) -> Result<(f64, MixedStrategy)> {
    let n = a.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| nash.probs()[j].total_cmp(&nash.probs()[i]).then(i.cmp(&j)));
    order.truncate(k);
    order.sort_unstable();
    let sub = a.select(ndarray::Axis(0), &order);
    let (v, xs) = maximin(&sub)?;
    let mut best = (v, xs.lift(&order, n));
    for i in 0..n {
        let worst = a.row(i).fold(f64::INFINITY, |acc, &c| acc.min(c));
        if worst > best.0 {
            best = (worst, MixedStrategy::pure(n, i));
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RmVariant {
    Rm,
    RmPlus,
    PrmPlus,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RmParams {
    pub iterations: usize,
    pub runtime_cap: Option<Duration>,
    pub sample_interval: usize,
}

impl Default for RmParams {
    fn default() -> Self {
        RmParams {
            iterations: 10_000,
            runtime_cap: Some(Duration::from_secs(120)),
            sample_interval: 5,
        }
    }
}

/// Strategy proportional to the positive part of `r`, uniform when no entry
/// is positive.
pub fn regret_matching_strategy(r: &[f64]) -> Vec<f64> {
    let total: f64 = r.iter().map(|v| v.max(0.0)).sum();
    if total > 0.0 {
        r.iter().map(|v| v.max(0.0) / total).collect()
    } else {
        vec![1.0 / r.len() as f64; r.len()]
    }
}

struct Learner {
    regret: Vec<f64>,
    last: Vec<f64>,
    avg: Vec<f64>,
    clip: bool,
    predictive: bool,
}

impl Learner {
    fn new(n: usize, variant: RmVariant) -> Self {
        Learner {
            regret: vec![0.0; n],
            last: vec![0.0; n],
            avg: vec![0.0; n],
            clip: variant != RmVariant::Rm,
            predictive: variant == RmVariant::PrmPlus,
        }
    }

    fn strategy(&self) -> Vec<f64> {
        if self.predictive {
            let r: Vec<f64> = self.regret.iter().zip(&self.last).map(|(a, b)| a + b).collect();
            regret_matching_strategy(&r)
        } else {
            regret_matching_strategy(&self.regret)
        }
    }

    /// Accumulates the instantaneous regret of `strategy` under utilities `u`.
    fn observe(&mut self, strategy: &[f64], u: &Array1<f64>) {
        let ev: f64 = strategy.iter().zip(u.iter()).map(|(p, v)| p * v).sum();
        for ((r, l), v) in self.regret.iter_mut().zip(self.last.iter_mut()).zip(u.iter()) {
            *l = v - ev;
            *r += *l;
            if self.clip {
                *r = r.max(0.0);
            }
        }
    }

    fn accumulate(&mut self, strategy: &[f64], w: f64) {
        for (a, p) in self.avg.iter_mut().zip(strategy) {
            *a += w * p;
        }
    }

    fn average(&self) -> MixedStrategy {
        MixedStrategy::from_weights(&self.avg)
    }
}

/// Runs one of the regret-matching dynamics and reports the average
/// strategies. Stops at whichever of the iteration or runtime cap comes first.
pub fn regret_matching(a: &Array2<f64>, variant: RmVariant, params: &RmParams) -> Result<SolveReport> {
    check_matrix(a)?;
    if params.sample_interval == 0 {
        return Err(invalid("sample interval must be >= 1"));
    }
    let (n, m) = a.dim();
    let start = Instant::now();
    let mut row = Learner::new(n, variant);
    let mut col = Learner::new(m, variant);
    let mut trace = Vec::new();
    let mut stop = StopReason::IterationCap;
    let mut done = 0usize;

    for t in 1..=params.iterations {
        let w = match variant {
            RmVariant::Rm => 1.0,
            RmVariant::RmPlus => t as f64,
            RmVariant::PrmPlus => (t as f64).powi(2),
        };
        let x = row.strategy();
        let xv = Array1::from(x.clone());
        if variant == RmVariant::Rm {
            let y = col.strategy();
            let yv = Array1::from(y.clone());
            row.observe(&x, &row_values(a, yv.view()));
            col.observe(&y, &col_values(a, xv.view()).mapv(|v| -v));
            row.accumulate(&x, w);
            col.accumulate(&y, w);
        } else {
            // Alternation: the column player answers the fresh row strategy,
            // then the row player answers the updated column strategy.
            let y_old = col.strategy();
            col.observe(&y_old, &col_values(a, xv.view()).mapv(|v| -v));
            let y = col.strategy();
            let yv = Array1::from(y.clone());
            row.observe(&x, &row_values(a, yv.view()));
            row.accumulate(&x, w);
            col.accumulate(&y, w);
        }
        done = t;
        if t % params.sample_interval == 0 {
            let (xa, ya) = (row.average(), col.average());
            trace.push(GapSample {
                iteration: t,
                time_s: start.elapsed().as_secs_f64(),
                gap: duality_gap(a, xa.view(), ya.view()),
            });
        }
        if let Some(cap) = params.runtime_cap {
            if t % 16 == 0 && start.elapsed() >= cap {
                stop = StopReason::RuntimeCap;
                break;
            }
        }
    }
    let (x, y) = (row.average(), col.average());
    if trace.last().map_or(true, |s| s.iteration != done) {
        trace.push(GapSample {
            iteration: done,
            time_s: start.elapsed().as_secs_f64(),
            gap: duality_gap(a, x.view(), y.view()),
        });
    }
    let value = x.view().dot(&row_values(a, y.view()));
    Ok(SolveReport {
        value,
        row: x,
        col: y,
        iterations: done,
        wall_time_s: start.elapsed().as_secs_f64(),
        gap_trace: trace,
        stop,
    })
}

/// A zero-sum game given implicitly through payoff evaluation and exact
/// best-response oracles. Payoffs are to the row player.
pub trait OracleGame {
    type Row: Clone + Eq + Hash;
    type Col: Clone + Eq + Hash;

    fn payoff(&self, r: &Self::Row, c: &Self::Col) -> Result<f64>;
    fn initial_row(&self) -> Result<Self::Row>;
    fn initial_col(&self) -> Result<Self::Col>;
    /// Row maximising expected payoff against `y` over `cols`, with that payoff.
    fn best_row(&self, cols: &[Self::Col], y: &MixedStrategy) -> Result<(Self::Row, f64)>;
    /// Column minimising expected payoff against `x` over `rows`, with that payoff.
    fn best_col(&self, rows: &[Self::Row], x: &MixedStrategy) -> Result<(Self::Col, f64)>;
}

/// Double-oracle result: the restricted action sets and their equilibrium.
#[derive(Debug, Clone)]
pub struct DoOutcome<R, C> {
    pub report: SolveReport,
    pub rows: Vec<R>,
    pub cols: Vec<C>,
}

/// Default stopping tolerance for double oracle.
pub const DO_EPSILON: f64 = 1e-12;

/// Grows restricted action sets with best responses until neither player
/// can improve on the restricted equilibrium by more than `eps`. The gap
/// trace records `upper - lower` bounds per iteration.
pub fn double_oracle<G: OracleGame>(game: &G, eps: f64) -> Result<DoOutcome<G::Row, G::Col>> {
    let start = Instant::now();
    let mut rows = vec![game.initial_row()?];
    let mut cols = vec![game.initial_col()?];
    let mut row_seen: HashMap<G::Row, usize> = HashMap::from([(rows[0].clone(), 0)]);
    let mut col_seen: HashMap<G::Col, usize> = HashMap::from([(cols[0].clone(), 0)]);
    let mut payoff = vec![vec![game.payoff(&rows[0], &cols[0])?]];
    let mut trace = Vec::new();
    let mut iteration = 0;

    loop {
        iteration += 1;
        let a = crate::matrix::from_rows(&payoff)?;
        let eq = nash_lp(&a)?;
        let (br_row, upper) = game.best_row(&cols, &eq.col)?;
        let (br_col, lower) = game.best_col(&rows, &eq.row)?;
        trace.push(GapSample {
            iteration,
            time_s: start.elapsed().as_secs_f64(),
            gap: upper - lower,
        });
        let tol = 1e-9 * (1.0 + eq.value.abs());
        debug_assert!(upper >= eq.value - tol && lower <= eq.value + tol);
        let improve_row = upper - eq.value > eps && !row_seen.contains_key(&br_row);
        let improve_col = eq.value - lower > eps && !col_seen.contains_key(&br_col);
        if !improve_row && !improve_col {
            return Ok(DoOutcome {
                report: SolveReport {
                    value: eq.value,
                    row: eq.row,
                    col: eq.col,
                    iterations: iteration,
                    wall_time_s: start.elapsed().as_secs_f64(),
                    gap_trace: trace,
                    stop: StopReason::Converged,
                },
                rows,
                cols,
            });
        }
        if improve_row {
            let new_row = cols.iter().map(|c| game.payoff(&br_row, c)).collect::<Result<Vec<_>>>()?;
            row_seen.insert(br_row.clone(), rows.len());
            rows.push(br_row);
            payoff.push(new_row);
        }
        if improve_col {
            for (r, line) in rows.iter().zip(payoff.iter_mut()) {
                line.push(game.payoff(r, &br_col)?);
            }
            col_seen.insert(br_col.clone(), cols.len());
            cols.push(br_col);
        }
    }
}

/// Explicit matrix viewed as an oracle game; best responses break ties
/// toward the lowest index.
pub struct MatrixOracles<'a>(pub &'a Array2<f64>);

impl OracleGame for MatrixOracles<'_> {
    type Row = usize;
    type Col = usize;

    fn payoff(&self, r: &usize, c: &usize) -> Result<f64> {
        Ok(self.0[[*r, *c]])
    }

    fn initial_row(&self) -> Result<usize> {
        Ok(0)
    }

    fn initial_col(&self) -> Result<usize> {
        Ok(0)
    }

    fn best_row(&self, cols: &[usize], y: &MixedStrategy) -> Result<(usize, f64)> {
        let full = y.lift(cols, self.0.ncols());
        let vals = row_values(self.0, full.view());
        Ok(argbest(vals.iter().copied(), |a, b| a > b))
    }

    fn best_col(&self, rows: &[usize], x: &MixedStrategy) -> Result<(usize, f64)> {
        let full = x.lift(rows, self.0.nrows());
        let vals = col_values(self.0, full.view());
        Ok(argbest(vals.iter().copied(), |a, b| a < b))
    }
}

/// First index whose value is strictly better than every earlier one.
pub(crate) fn argbest(values: impl Iterator<Item = f64>, better: impl Fn(f64, f64) -> bool) -> (usize, f64) {
    let mut best = (0, f64::NAN);
    for (i, v) in values.enumerate() {
        if i == 0 || better(v, best.1) {
            best = (i, v);
        }
    }
    best
}

/// Double oracle on an explicit matrix.
pub fn double_oracle_matrix(a: &Array2<f64>, eps: f64) -> Result<SolveReport> {
    check_matrix(a)?;
    let out = double_oracle(&MatrixOracles(a), eps)?;
    let (n, m) = a.dim();
    Ok(SolveReport {
        row: out.report.row.lift(&out.rows, n),
        col: out.report.col.lift(&out.cols, m),
        ..out.report
    })
}
