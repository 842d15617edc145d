//! Two-phase dense tableau simplex.
//!
//! Entering columns are chosen by Dantzig's rule until a run of degenerate
//! pivots is seen, after which Bland's rule takes over until the objective
//! moves again. Leaving rows always break ratio ties by lowest basic index.

use crate::problem::{LinearProgram, Relation, Sense};
use crate::{LpError, LpOutcome, LpSolution, TOLERANCE};

const PIVOT_EPS: f64 = 1e-9;
const COST_EPS: f64 = 1e-10;
const DEGENERATE_STREAK: usize = 20;

#[derive(Debug, Clone, Copy)]
enum VarMap {
    /// x = lower + y
    Shift { col: usize, lower: f64 },
    /// x = upper - y
    Mirror { col: usize, upper: f64 },
    /// x = y_pos - y_neg
    Split { pos: usize, neg: usize },
}

struct Row {
    terms: Vec<(usize, f64)>,
    relation: Relation,
    rhs: f64,
}

struct Tableau {
    cols: usize,
    width: usize,
    data: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    fn rows(&self) -> usize {
        self.basis.len()
    }

    #[inline]
    fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.width + c]
    }

    #[inline]
    fn rhs(&self, r: usize) -> f64 {
        self.data[r * self.width + self.cols]
    }

    fn pivot(&mut self, obj: &mut [f64], r: usize, c: usize) {
        let w = self.width;
        let p = self.data[r * w + c];
        {
            let row = &mut self.data[r * w..(r + 1) * w];
            for v in row.iter_mut() {
                *v /= p;
            }
            row[c] = 1.0;
        }
        let pivot_row: Vec<f64> = self.data[r * w..(r + 1) * w].to_vec();
        for i in 0..self.rows() {
            if i == r {
                continue;
            }
            let f = self.data[i * w + c];
            if f == 0.0 {
                continue;
            }
            let row = &mut self.data[i * w..(i + 1) * w];
            for (v, pv) in row.iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
            row[c] = 0.0;
            let rhs = &mut row[self.cols];
            if *rhs < 0.0 && *rhs > -1e-12 {
                *rhs = 0.0;
            }
        }
        let f = obj[c];
        if f != 0.0 {
            for (v, pv) in obj.iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
            obj[c] = 0.0;
        }
        self.basis[r] = c;
    }

    /// Minimizes the objective whose reduced costs are stored in `obj`
    /// (`obj[cols]` holds minus the current objective value). Returns
    /// `Ok(false)` if the problem is unbounded.
    fn optimize(&mut self, obj: &mut [f64], allowed: usize, max_iter: usize) -> Result<bool, LpError> {
        let mut degenerate_run = 0usize;
        for _ in 0..max_iter {
            let bland = degenerate_run >= DEGENERATE_STREAK;
            let mut entering = None;
            let mut best = -COST_EPS;
            for (j, &rc) in obj.iter().enumerate().take(allowed) {
                if rc < best {
                    entering = Some(j);
                    if bland {
                        break;
                    }
                    best = rc;
                }
            }
            let Some(c) = entering else {
                return Ok(true);
            };

            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.rows() {
                let a = self.get(r, c);
                if a <= PIVOT_EPS {
                    continue;
                }
                let ratio = self.rhs(r).max(0.0) / a;
                match leave {
                    None => leave = Some((r, ratio)),
                    Some((lr, lratio)) => {
                        let tie = (ratio - lratio).abs() <= 1e-12 * (1.0 + lratio.abs());
                        if (!tie && ratio < lratio) || (tie && self.basis[r] < self.basis[lr]) {
                            leave = Some((r, ratio));
                        }
                    }
                }
            }
            let Some((r, ratio)) = leave else {
                return Ok(false);
            };
            if ratio <= 1e-12 {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }
            self.pivot(obj, r, c);
        }
        Err(LpError::IterationLimit(max_iter))
    }
}

/// Solves `lp` to optimality, or reports infeasibility / unboundedness.
pub fn solve_lp(lp: &LinearProgram) -> Result<LpOutcome, LpError> {
    lp.validate()?;
    if lp
        .bounds
        .iter()
        .any(|(lo, hi)| lo.is_finite() && hi.is_finite() && *lo > *hi + TOLERANCE)
    {
        return Ok(LpOutcome::Infeasible);
    }

    // Map every variable onto nonnegative tableau columns.
    let mut maps = Vec::with_capacity(lp.num_vars());
    let mut ny = 0usize;
    let mut rows: Vec<Row> = Vec::new();
    for &(lo, hi) in &lp.bounds {
        let m = if lo.is_finite() {
            let col = ny;
            ny += 1;
            if hi.is_finite() {
                rows.push(Row {
                    terms: vec![(col, 1.0)],
                    relation: Relation::Le,
                    rhs: (hi - lo).max(0.0),
                });
            }
            VarMap::Shift { col, lower: lo }
        } else if hi.is_finite() {
            let col = ny;
            ny += 1;
            VarMap::Mirror { col, upper: hi }
        } else {
            ny += 2;
            VarMap::Split {
                pos: ny - 2,
                neg: ny - 1,
            }
        };
        maps.push(m);
    }

    let sign = match lp.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    let mut cost = vec![0.0; ny];
    for (j, &c) in lp.objective.iter().enumerate() {
        let c = sign * c;
        match maps[j] {
            VarMap::Shift { col, .. } => cost[col] += c,
            VarMap::Mirror { col, .. } => cost[col] -= c,
            VarMap::Split { pos, neg } => {
                cost[pos] += c;
                cost[neg] -= c;
            }
        }
    }

    for con in &lp.constraints {
        let mut rhs = con.rhs;
        let mut terms: Vec<(usize, f64)> = Vec::with_capacity(con.terms.len());
        for &(j, a) in &con.terms {
            match maps[j] {
                VarMap::Shift { col, lower } => {
                    rhs -= a * lower;
                    terms.push((col, a));
                }
                VarMap::Mirror { col, upper } => {
                    rhs -= a * upper;
                    terms.push((col, -a));
                }
                VarMap::Split { pos, neg } => {
                    terms.push((pos, a));
                    terms.push((neg, -a));
                }
            }
        }
        rows.push(Row {
            terms,
            relation: con.relation,
            rhs,
        });
    }

    for row in rows.iter_mut() {
        if row.rhs < 0.0 {
            row.rhs = -row.rhs;
            for t in row.terms.iter_mut() {
                t.1 = -t.1;
            }
            row.relation = match row.relation {
                Relation::Le => Relation::Ge,
                Relation::Ge => Relation::Le,
                Relation::Eq => Relation::Eq,
            };
        }
    }

    let n_slack = rows
        .iter()
        .filter(|r| r.relation != Relation::Eq)
        .count();
    let n_art = rows
        .iter()
        .filter(|r| r.relation != Relation::Le)
        .count();
    let first_art = ny + n_slack;
    let cols = first_art + n_art;
    let width = cols + 1;
    let m = rows.len();
    let mut data = vec![0.0; m * width];
    let mut basis = vec![0usize; m];
    let mut next_slack = ny;
    let mut next_art = first_art;
    for (r, row) in rows.iter().enumerate() {
        let base = r * width;
        for &(j, a) in &row.terms {
            data[base + j] += a;
        }
        data[base + cols] = row.rhs;
        match row.relation {
            Relation::Le => {
                data[base + next_slack] = 1.0;
                basis[r] = next_slack;
                next_slack += 1;
            }
            Relation::Ge => {
                data[base + next_slack] = -1.0;
                next_slack += 1;
                data[base + next_art] = 1.0;
                basis[r] = next_art;
                next_art += 1;
            }
            Relation::Eq => {
                data[base + next_art] = 1.0;
                basis[r] = next_art;
                next_art += 1;
            }
        }
    }
    let mut tab = Tableau {
        cols,
        width,
        data,
        basis,
    };
    let max_iter = 50_000 + 50 * (m + cols);
    let rhs_scale = rows.iter().map(|r| r.rhs).fold(1.0, f64::max);

    if n_art > 0 {
        let mut obj = vec![0.0; width];
        for j in first_art..cols {
            obj[j] = 1.0;
        }
        for r in 0..m {
            if tab.basis[r] >= first_art {
                for (o, v) in obj.iter_mut().zip(&tab.data[r * width..(r + 1) * width]) {
                    *o -= v;
                }
            }
        }
        tab.optimize(&mut obj, cols, max_iter)?;
        let infeasibility = -obj[cols];
        if infeasibility > 1e-8 * rhs_scale {
            return Ok(LpOutcome::Infeasible);
        }

        // Pivot remaining zero-level artificials out of the basis.
        let mut redundant = Vec::new();
        for r in 0..m {
            if tab.basis[r] < first_art {
                continue;
            }
            let mut best: Option<(usize, f64)> = None;
            for j in 0..first_art {
                let a = tab.get(r, j).abs();
                if a > PIVOT_EPS && best.is_none_or(|(_, b)| a > b) {
                    best = Some((j, a));
                }
            }
            match best {
                Some((j, _)) => tab.pivot(&mut obj, r, j),
                None => redundant.push(r),
            }
        }

        // Drop artificial columns and redundant rows.
        let new_width = first_art + 1;
        let keep: Vec<usize> = (0..m).filter(|r| !redundant.contains(r)).collect();
        let mut data = Vec::with_capacity(keep.len() * new_width);
        let mut basis = Vec::with_capacity(keep.len());
        for &r in &keep {
            let row = &tab.data[r * width..(r + 1) * width];
            data.extend_from_slice(&row[..first_art]);
            data.push(row[cols]);
            basis.push(tab.basis[r]);
        }
        tab = Tableau {
            cols: first_art,
            width: new_width,
            data,
            basis,
        };
    }

    let cols = tab.cols;
    let mut obj = vec![0.0; tab.width];
    obj[..ny].copy_from_slice(&cost);
    for r in 0..tab.rows() {
        let cb = if tab.basis[r] < ny { cost[tab.basis[r]] } else { 0.0 };
        if cb != 0.0 {
            for (o, v) in obj.iter_mut().zip(&tab.data[r * tab.width..(r + 1) * tab.width]) {
                *o -= cb * v;
            }
        }
    }
    for r in 0..tab.rows() {
        obj[tab.basis[r]] = 0.0;
    }
    if !tab.optimize(&mut obj, cols, max_iter)? {
        return Ok(LpOutcome::Unbounded);
    }

    let mut y = vec![0.0; ny];
    for r in 0..tab.rows() {
        if tab.basis[r] < ny {
            y[tab.basis[r]] = tab.rhs(r).max(0.0);
        }
    }
    let x: Vec<f64> = maps
        .iter()
        .map(|m| match *m {
            VarMap::Shift { col, lower } => lower + y[col],
            VarMap::Mirror { col, upper } => upper - y[col],
            VarMap::Split { pos, neg } => y[pos] - y[neg],
        })
        .collect();
    let value = lp.evaluate(&x);
    Ok(LpOutcome::Optimal(LpSolution { value, x }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Constraint;

    fn approx(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-9
    }

    #[test]
    fn single_upper_bound() {
        let mut lp = LinearProgram::new(Sense::Maximize, vec![1.0]);
        lp.add_dense(&[1.0], Relation::Le, 3.0);
        let s = solve_lp(&lp).unwrap().optimal().unwrap();
        assert!(approx(s.value, 3.0));
    }

    #[test]
    fn contradictory_rows_are_infeasible() {
        let mut lp = LinearProgram::new(Sense::Maximize, vec![1.0]);
        lp.add_dense(&[1.0], Relation::Le, -1.0);
        assert_eq!(solve_lp(&lp).unwrap(), LpOutcome::Infeasible);
    }

    #[test]
    fn unbounded_ray() {
        let mut lp = LinearProgram::new(Sense::Maximize, vec![1.0, 1.0]);
        lp.add_dense(&[1.0, -1.0], Relation::Le, 1.0);
        assert_eq!(solve_lp(&lp).unwrap(), LpOutcome::Unbounded);
    }

    #[test]
    fn matching_pennies_value_is_zero() {
        // vars: x1, x2, v (free); max v s.t. v <= x^T A e_j
        let mut lp = LinearProgram::new(Sense::Maximize, vec![0.0, 0.0, 1.0]);
        lp.set_free(2);
        lp.add_dense(&[-1.0, 1.0, 1.0], Relation::Le, 0.0);
        lp.add_dense(&[1.0, -1.0, 1.0], Relation::Le, 0.0);
        lp.add_dense(&[1.0, 1.0, 0.0], Relation::Eq, 1.0);
        let s = solve_lp(&lp).unwrap().optimal().unwrap();
        assert!(approx(s.value, 0.0));
        assert!(approx(s.x[0], 0.5));
    }

    #[test]
    fn free_and_mirrored_bounds() {
        // min x + y, x in (-inf, 2], y free with y >= -4, x >= -3 via row
        let mut lp = LinearProgram::new(Sense::Minimize, vec![1.0, 1.0]);
        lp.set_bounds(0, f64::NEG_INFINITY, 2.0);
        lp.set_free(1);
        lp.add_dense(&[1.0, 0.0], Relation::Ge, -3.0);
        lp.add_dense(&[0.0, 1.0], Relation::Ge, -4.0);
        let s = solve_lp(&lp).unwrap().optimal().unwrap();
        assert!(approx(s.value, -7.0));
    }

    #[test]
    fn redundant_equalities_are_tolerated() {
        let mut lp = LinearProgram::new(Sense::Maximize, vec![1.0, 2.0]);
        lp.add_dense(&[1.0, 1.0], Relation::Eq, 1.0);
        lp.add_dense(&[2.0, 2.0], Relation::Eq, 2.0);
        let s = solve_lp(&lp).unwrap().optimal().unwrap();
        assert!(approx(s.value, 2.0));
    }

    #[test]
    fn fixed_bounds() {
        let mut lp = LinearProgram::new(Sense::Maximize, vec![1.0, 1.0]);
        lp.set_bounds(0, 0.25, 0.25);
        lp.add_dense(&[1.0, 1.0], Relation::Le, 1.0);
        let s = solve_lp(&lp).unwrap().optimal().unwrap();
        assert!(approx(s.x[0], 0.25));
        assert!(approx(s.value, 1.0));
    }

    #[test]
    fn crossed_bounds_are_infeasible() {
        let mut lp = LinearProgram::new(Sense::Maximize, vec![1.0]);
        lp.set_bounds(0, 1.0, 0.0);
        assert_eq!(solve_lp(&lp).unwrap(), LpOutcome::Infeasible);
    }

    #[test]
    fn rejects_out_of_range_variable() {
        let mut lp = LinearProgram::new(Sense::Maximize, vec![1.0]);
        lp.add(Constraint::new(vec![(3, 1.0)], Relation::Le, 1.0));
        assert!(matches!(solve_lp(&lp), Err(LpError::DimensionMismatch { .. })));
    }

    #[test]
    fn rejects_nan() {
        let lp = LinearProgram::new(Sense::Maximize, vec![f64::NAN]);
        assert!(matches!(solve_lp(&lp), Err(LpError::NonFinite(_))));
    }

    #[test]
    fn classic_degenerate_problem_terminates() {
        // Beale's cycling example.
        let mut lp = LinearProgram::new(Sense::Minimize, vec![-0.75, 150.0, -0.02, 6.0]);
        lp.add_dense(&[0.25, -60.0, -0.04, 9.0], Relation::Le, 0.0);
        lp.add_dense(&[0.5, -90.0, -0.02, 3.0], Relation::Le, 0.0);
        lp.add_dense(&[0.0, 0.0, 1.0, 0.0], Relation::Le, 1.0);
        let s = solve_lp(&lp).unwrap().optimal().unwrap();
        assert!((s.value - (-0.05)).abs() < 1e-9);
    }
}
