//! Delay-resilient safety shields.
//!
//! Build a [`GameGraph`], solve it without delay ([`solve_safety`]) or under an
//! observation delay ([`solve_delayed`]), and run a [`Shield`] that passes
//! through safe agent actions and replaces unsafe ones.

pub mod bits;
pub mod delayed;
pub mod error;
pub mod game;
pub mod harness;
pub mod scenarios;
pub mod shield;
pub mod solver;
pub mod strategy_file;

pub use bits::{ActionSet, BitSet};
pub use delayed::{solve_delayed, solve_delayed_with, DelayedStrategy, SolveOptions, SolveStats};
pub use error::{Error, Result};
pub use game::{parse_game, serialize_game, validate, ActionId, GameGraph, InputId, Observation, StateId};
pub use shield::{
    controllability_values, forward_set, pick_action, robustness_values, ControllabilityMap, Heuristic, Pick,
    RobustnessMap, Shield, StepOutcome,
};
pub use solver::{solve_safety, PermissiveStrategy};
