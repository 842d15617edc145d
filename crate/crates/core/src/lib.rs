//! Security-game instance generation, equilibrium solvers and random-game
//! diagnostics.

pub mod error;
pub mod experiments;
pub mod game;
pub mod geo;
pub mod graph;
pub mod instance;
pub mod io;
pub mod matrix;
pub mod presets;
pub mod random_lab;
pub mod schedule;
pub mod solvers;
pub mod strategy;

pub use error::{Error, Result};
pub use game::{ActionMatrix, GameConfig, InterdictionProtocol, Player, PlayerSetup, ResourceKind, TargetSpec};
pub use graph::{Coord, DirectedGameGraph, DistanceMetric, Node, NodeId};
pub use matrix::BimatrixGame;
pub use strategy::{MixedStrategy, SolveReport, StopReason};
