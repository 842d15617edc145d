//! Depth-first branch-and-bound for programs with binary variables.

use crate::problem::{LinearProgram, Sense};
use crate::simplex::solve_lp;
use crate::{LpError, LpOutcome, LpSolution};

const INTEGRALITY_EPS: f64 = 1e-6;

/// A linear program in which the listed variables must take values in {0, 1}.
#[derive(Debug, Clone, PartialEq)]
pub struct MipProgram {
    pub lp: LinearProgram,
    pub binaries: Vec<usize>,
}

impl MipProgram {
    pub fn new(lp: LinearProgram, binaries: Vec<usize>) -> Self {
        MipProgram { lp, binaries }
    }
}

#[derive(Debug, Clone, Default)]
pub struct MipOptions {
    /// A known feasible solution; nodes that cannot beat it are pruned.
    pub incumbent: Option<LpSolution>,
    /// Abort with [`LpError::NodeLimit`] after this many LP relaxations.
    pub node_limit: Option<usize>,
}

pub fn solve_mip(mip: &MipProgram) -> Result<LpOutcome, LpError> {
    solve_mip_with(mip, &MipOptions::default())
}

/// Branch-and-bound that always branches on the lowest-index fractional
/// binary, exploring the child nearest to the relaxed value first.
pub fn solve_mip_with(mip: &MipProgram, options: &MipOptions) -> Result<LpOutcome, LpError> {
    let n = mip.lp.num_vars();
    let mut binaries = mip.binaries.clone();
    binaries.sort_unstable();
    binaries.dedup();
    if let Some(&b) = binaries.iter().find(|&&b| b >= n) {
        return Err(LpError::BinaryOutOfRange(b));
    }

    let mut root = mip.lp.clone();
    for &b in &binaries {
        let (lo, hi) = root.bounds[b];
        root.bounds[b] = (lo.max(0.0), hi.min(1.0));
    }

    // Internally compare in "larger is better" terms.
    let better = |a: f64, b: f64| match mip.lp.sense {
        Sense::Maximize => a > b + 1e-9 * (1.0 + b.abs()),
        Sense::Minimize => a < b - 1e-9 * (1.0 + b.abs()),
    };

    let mut incumbent = options.incumbent.clone();
    let mut stack: Vec<Vec<(f64, f64)>> = vec![root.bounds.clone()];
    let mut nodes = 0usize;
    let mut work = root;

    while let Some(bounds) = stack.pop() {
        nodes += 1;
        if let Some(limit) = options.node_limit {
            if nodes > limit {
                return Err(LpError::NodeLimit(limit));
            }
        }
        work.bounds = bounds;
        let sol = match solve_lp(&work)? {
            LpOutcome::Optimal(s) => s,
            LpOutcome::Infeasible => continue,
            LpOutcome::Unbounded => {
                if incumbent.is_none() && nodes == 1 {
                    return Ok(LpOutcome::Unbounded);
                }
                continue;
            }
        };
        if let Some(inc) = &incumbent {
            if !better(sol.value, inc.value) {
                continue;
            }
        }
        let fractional = binaries.iter().copied().find(|&b| {
            let v = sol.x[b];
            (v - v.round()).abs() > INTEGRALITY_EPS
        });
        match fractional {
            None => {
                let mut x = sol.x;
                for &b in &binaries {
                    x[b] = x[b].round();
                }
                incumbent = Some(LpSolution {
                    value: sol.value,
                    x,
                });
            }
            Some(b) => {
                let mut down = work.bounds.clone();
                down[b] = (0.0, 0.0);
                let mut up = work.bounds.clone();
                up[b] = (1.0, 1.0);
                // The last pushed child is explored first.
                if sol.x[b] >= 0.5 {
                    stack.push(down);
                    stack.push(up);
                } else {
                    stack.push(up);
                    stack.push(down);
                }
            }
        }
    }

    Ok(match incumbent {
        Some(s) => LpOutcome::Optimal(s),
        None => LpOutcome::Infeasible,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Relation;

    #[test]
    fn small_knapsack() {
        let mut lp = LinearProgram::new(Sense::Maximize, vec![3.0, 4.0]);
        lp.add_dense(&[2.0, 3.0], Relation::Le, 3.0);
        let s = solve_mip(&MipProgram::new(lp, vec![0, 1]))
            .unwrap()
            .optimal()
            .unwrap();
        assert!((s.value - 4.0).abs() < 1e-9);
        assert_eq!(s.x, vec![0.0, 1.0]);
    }

    #[test]
    fn binaries_fixed_by_bounds_match_lp() {
        let mut lp = LinearProgram::new(Sense::Maximize, vec![1.0, 2.0, 0.5]);
        lp.set_bounds(0, 1.0, 1.0).set_bounds(1, 0.0, 0.0);
        lp.add_dense(&[1.0, 1.0, 1.0], Relation::Le, 2.5);
        let relaxed = solve_lp(&lp).unwrap().optimal().unwrap();
        let s = solve_mip(&MipProgram::new(lp, vec![0, 1]))
            .unwrap()
            .optimal()
            .unwrap();
        assert!((s.value - relaxed.value).abs() < 1e-12);
    }

    #[test]
    fn fractional_equality_is_infeasible() {
        let mut lp = LinearProgram::new(Sense::Maximize, vec![1.0, 1.0]);
        lp.add_dense(&[1.0, 1.0], Relation::Eq, 1.5);
        let out = solve_mip(&MipProgram::new(lp, vec![0, 1])).unwrap();
        assert_eq!(out, LpOutcome::Infeasible);
    }

    #[test]
    fn out_of_range_binary() {
        let lp = LinearProgram::new(Sense::Maximize, vec![1.0]);
        assert_eq!(
            solve_mip(&MipProgram::new(lp, vec![2])),
            Err(LpError::BinaryOutOfRange(2))
        );
    }

    #[test]
    fn node_limit_is_reported() {
        let mut lp = LinearProgram::new(Sense::Maximize, vec![1.0, 1.0, 1.0]);
        lp.add_dense(&[2.0, 2.0, 2.0], Relation::Le, 3.0);
        let opts = MipOptions {
            incumbent: None,
            node_limit: Some(1),
        };
        assert_eq!(
            solve_mip_with(&MipProgram::new(lp, vec![0, 1, 2]), &opts),
            Err(LpError::NodeLimit(1))
        );
    }
}
