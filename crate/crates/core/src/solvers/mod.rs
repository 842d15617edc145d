//! Equilibrium solvers and best-response oracles.

pub mod oracles;
pub mod stackelberg;
pub mod zero_sum;
