//! Dense linear programming and small mixed-integer programming.
//!
//! The solvers in this crate back every equilibrium computation in the
//! workspace. Problems are small and dense (a few thousand variables at most),
//! so the LP solver is a two-phase tableau simplex and the MIP solver is a
//! depth-first branch-and-bound over LP relaxations.

mod mip;
mod problem;
mod simplex;

pub use mip::{solve_mip, solve_mip_with, MipOptions, MipProgram};
pub use problem::{Constraint, LinearProgram, Relation, Sense};
pub use simplex::solve_lp;

use thiserror::Error;

/// Absolute tolerance used for feasibility and optimality decisions.
pub const TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("constraint {row} references variable {var} but the program has {num_vars} variables")]
    DimensionMismatch {
        row: usize,
        var: usize,
        num_vars: usize,
    },
    #[error("objective has {got} coefficients, expected {expected}")]
    ObjectiveLength { got: usize, expected: usize },
    #[error("binary variable index {0} is out of range")]
    BinaryOutOfRange(usize),
    #[error("non-finite coefficient in {0}")]
    NonFinite(&'static str),
    #[error("simplex iteration limit ({0}) exceeded")]
    IterationLimit(usize),
    #[error("branch-and-bound node limit ({0}) exceeded")]
    NodeLimit(usize),
}

/// An optimal primal point together with its objective value.
#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub value: f64,
    pub x: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal(LpSolution),
    Infeasible,
    Unbounded,
}

impl LpOutcome {
    pub fn optimal(self) -> Option<LpSolution> {
        match self {
            LpOutcome::Optimal(s) => Some(s),
            _ => None,
        }
    }

    pub fn is_optimal(&self) -> bool {
        matches!(self, LpOutcome::Optimal(_))
    }
}
