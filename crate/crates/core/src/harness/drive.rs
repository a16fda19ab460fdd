use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::delayed::{solve_delayed_with, SolveOptions};
use crate::error::{Error, Result};
use crate::scenarios::car::{CarState, PedState};
use crate::scenarios::{Scenario, ScenarioName, World};
use crate::shield::{robustness_values, Heuristic};

use super::simulate::{play, write_trace, TraceRow};
use super::Caps;

#[derive(Clone, Debug)]
pub struct DriveOptions {
    pub scenario: ScenarioName,
    pub delay: usize,
    /// `name=value` pairs, see [`Scenario::parse_state`].
    pub init: String,
    pub steps: usize,
    pub seed: u64,
    pub csv: Option<PathBuf>,
    pub caps: Caps,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DriveReport {
    pub scenario: String,
    pub delay: usize,
    pub seed: u64,
    pub initial_state: u32,
    /// First step at which the shield overrode the driver.
    pub braking_onset: Option<usize>,
    /// Agent distance to the crossing at the onset.
    pub onset_position: Option<i64>,
    /// Gap to the other road user at the onset: the environment car's
    /// position difference, or car minus pedestrian position.
    pub onset_gap: Option<i64>,
    pub interventions: u64,
    pub fallbacks: u64,
    pub unsafe_states: u64,
    /// Agent speed per step.
    pub velocity: Vec<i64>,
}

fn gap(world: &World, s: u32) -> i64 {
    match world {
        World::Intersection => {
            let c = CarState::from_id(s);
            (c.p_agent as i64 - c.p_env as i64).abs()
        }
        World::Pedestrian => {
            let c = PedState::from_id(s);
            c.p_agent as i64 - c.p_ped as i64
        }
        World::Grid(_) => 0,
    }
}

/// Returns the report and the full trace.
pub fn drive(opts: &DriveOptions) -> Result<(DriveReport, Vec<TraceRow>, Scenario)> {
    if !matches!(opts.scenario, ScenarioName::Intersection | ScenarioName::Pedestrian) {
        return Err(Error::UnknownScenario(format!("{} (drive supports intersection and pedestrian)", opts.scenario)));
    }
    if opts.delay > super::synth::MAX_DELAY {
        return Err(Error::DelayOutOfRange { level: opts.delay, delay: super::synth::MAX_DELAY });
    }
    let scenario = Scenario::build(opts.scenario, opts.caps.states)?;
    let s0 = scenario.parse_state(&opts.init)?;
    let solve_opts = SolveOptions { max_configs: opts.caps.configs, deadline: None };
    let (strategy, _) = solve_delayed_with(&scenario.game, opts.delay, &solve_opts)?;
    if !strategy.controllable_under(s0, opts.delay)? {
        return Err(Error::Uncontrollable { state: s0 as u64, delay: opts.delay });
    }
    let heuristic = Heuristic::Robustness(robustness_values(&scenario.game));
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut rows = Vec::with_capacity(opts.steps);
    let m = play(&scenario, &strategy, &heuristic, None, s0, opts.steps, 0, &mut rng, Some(&mut rows))?;
    let onset = rows.iter().find(|r| r.intervened);
    let report = DriveReport {
        scenario: opts.scenario.to_string(),
        delay: opts.delay,
        seed: opts.seed,
        initial_state: s0,
        braking_onset: onset.map(|r| r.step),
        onset_position: onset.map(|r| r.fields[0]),
        onset_gap: onset.map(|r| gap(&scenario.world, r.state)),
        interventions: m.interventions,
        fallbacks: m.fallbacks,
        unsafe_states: m.collisions + scenario.game.is_unsafe(s0) as u64,
        velocity: rows.iter().map(|r| r.fields[1]).collect(),
    };
    Ok((report, rows, scenario))
}

/// Runs a scripted reckless driver under the shield against a seeded random
/// environment and optionally writes the trace.
pub fn cmd_drive(opts: &DriveOptions) -> Result<DriveReport> {
    let (report, rows, scenario) = drive(opts)?;
    if let Some(path) = &opts.csv {
        write_trace(path, &scenario, &rows)?;
    }
    Ok(report)
}
