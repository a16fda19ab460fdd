use std::collections::VecDeque;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::delayed::{solve_delayed, DelayedStrategy};
use crate::error::{Error, Result};
use crate::game::{ActionId, InputId, Observation, StateId};
use crate::scenarios::car::{reckless_driver_policy, CarState, PedState};
use crate::scenarios::{Scenario, ScenarioName, World};
use crate::shield::{robustness_values, ControllabilityMap, Heuristic, Shield};
use crate::strategy_file::StrategyFile;

use super::synth::DEFAULT_DELTA_MAX;
use super::Caps;

#[derive(Clone, Debug)]
pub struct SimulateOptions {
    pub strategy: PathBuf,
    pub steps: usize,
    pub runs: usize,
    pub seed: u64,
    pub csv: Option<PathBuf>,
    /// Also ask the other heuristic for its correction at every intervention.
    pub compare: bool,
    pub caps: Caps,
}

/// One CSV row: the true state at `step` and what happened there.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceRow {
    pub run: usize,
    pub step: usize,
    pub state: StateId,
    pub fields: Vec<i64>,
    pub input: InputId,
    pub proposed: ActionId,
    pub emitted: ActionId,
    pub intervened: bool,
    pub fallback: bool,
    pub score_delta: i64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunMetrics {
    pub run: usize,
    pub initial_state: StateId,
    pub score: i64,
    pub interventions: u64,
    pub fallbacks: u64,
    pub collisions: u64,
    pub compared: u64,
    pub agreed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimulateSummary {
    pub scenario: String,
    pub delay: usize,
    pub heuristic: String,
    pub seed: u64,
    pub steps: usize,
    pub runs: usize,
    pub mean_score: f64,
    pub mean_interventions: f64,
    pub collisions: u64,
    pub fallbacks: u64,
    /// Share of compared interventions where both heuristics chose the same action.
    pub agreement: Option<f64>,
    pub per_run: Vec<RunMetrics>,
}

/// The agent and environment policies of a scenario.
struct Actors<'a> {
    scenario: &'a Scenario,
    treasure: Option<u32>,
}

impl Actors<'_> {
    fn input(&self, s: StateId, rng: &mut ChaCha8Rng) -> InputId {
        match &self.scenario.world {
            World::Grid(w) => w.kid_policy(s, rng),
            _ => rng.gen_range(0..self.scenario.game.num_inputs() as InputId),
        }
    }

    fn proposal(&self, s: StateId, rng: &mut ChaCha8Rng) -> ActionId {
        match &self.scenario.world {
            World::Grid(w) => w.treasure_agent_policy(s, self.treasure.unwrap(), rng),
            World::Intersection => reckless_driver_policy(CarState::from_id(s).v_agent),
            World::Pedestrian => reckless_driver_policy(PedState::from_id(s).v_agent),
        }
    }

    /// Treasure collected, or the car reaching the crossing.
    fn score(&mut self, before: StateId, after: StateId, rng: &mut ChaCha8Rng) -> i64 {
        match &self.scenario.world {
            World::Grid(w) => {
                let robot = w.split(after).0;
                if Some(robot) == self.treasure {
                    self.treasure = Some(w.spawn_treasure(robot, rng));
                    1
                } else {
                    0
                }
            }
            World::Intersection => {
                (CarState::from_id(before).p_agent > 0 && CarState::from_id(after).p_agent == 0) as i64
            }
            World::Pedestrian => (PedState::from_id(before).p_agent > 0 && PedState::from_id(after).p_agent == 0) as i64,
        }
    }
}

/// Plays one shielded run from `s0`, appending rows when `rows` is given.
#[allow(clippy::too_many_arguments)]
pub(crate) fn play(
    scenario: &Scenario,
    strategy: &DelayedStrategy,
    heuristic: &Heuristic,
    other: Option<&Heuristic>,
    s0: StateId,
    steps: usize,
    run: usize,
    rng: &mut ChaCha8Rng,
    mut rows: Option<&mut Vec<TraceRow>>,
) -> Result<RunMetrics> {
    let game = &scenario.game;
    let delay = strategy.delay();
    let mut shield = Shield::new(game, strategy, heuristic, s0, scenario.fallback_action())?;
    let mut actors = Actors { scenario, treasure: None };
    if let World::Grid(w) = &scenario.world {
        actors.treasure = Some(w.spawn_treasure(w.split(s0).0, rng));
    }
    let mut metrics = RunMetrics {
        run,
        initial_state: s0,
        score: 0,
        interventions: 0,
        fallbacks: 0,
        collisions: 0,
        compared: 0,
        agreed: 0,
    };
    let mut history: VecDeque<Observation> = VecDeque::with_capacity(delay + 1);
    let mut s = s0;
    for step in 0..steps {
        let input = actors.input(s, rng);
        let proposed = actors.proposal(s, rng);
        history.push_back(Observation { state: s, input });
        let obs = if history.len() > delay { history.pop_front() } else { None };
        let alt = match other {
            Some(h) => shield.correction_under(h, obs, proposed)?,
            None => None,
        };
        let out = shield.step(obs, proposed)?;
        if out.intervened && !out.fallback {
            if let Some(a) = alt {
                metrics.compared += 1;
                metrics.agreed += (a == out.emitted) as u64;
            }
        }
        let next = game.successor(s, input, out.emitted);
        let score_delta = actors.score(s, next, rng);
        metrics.score += score_delta;
        metrics.interventions += out.intervened as u64;
        metrics.fallbacks += out.fallback as u64;
        metrics.collisions += game.is_unsafe(next) as u64;
        if let Some(rows) = rows.as_deref_mut() {
            rows.push(TraceRow {
                run,
                step,
                state: s,
                fields: scenario.fields(s),
                input,
                proposed,
                emitted: out.emitted,
                intervened: out.intervened,
                fallback: out.fallback,
                score_delta,
            });
        }
        s = next;
    }
    Ok(metrics)
}

pub(crate) fn write_trace(path: &Path, scenario: &Scenario, rows: &[TraceRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["run", "step", "state"];
    header.extend_from_slice(scenario.field_names());
    header.extend_from_slice(&["input", "proposed", "emitted", "intervened", "fallback", "score_delta"]);
    w.write_record(&header)?;
    for r in rows {
        let mut rec: Vec<String> = vec![r.run.to_string(), r.step.to_string(), r.state.to_string()];
        rec.extend(r.fields.iter().map(i64::to_string));
        rec.extend([
            r.input.to_string(),
            r.proposed.to_string(),
            r.emitted.to_string(),
            (r.intervened as u8).to_string(),
            (r.fallback as u8).to_string(),
            r.score_delta.to_string(),
        ]);
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// The heuristic the file was not synthesized with, for agreement measurements.
fn other_heuristic(scenario: &Scenario, file: &StrategyFile) -> Heuristic {
    match &file.heuristic {
        Heuristic::Robustness(_) => {
            let depth = DEFAULT_DELTA_MAX.max(file.strategy.delay());
            Heuristic::Controllability(ControllabilityMap::from_strategy(&solve_delayed(&scenario.game, depth)))
        }
        Heuristic::Controllability(_) => Heuristic::Robustness(robustness_values(&scenario.game)),
    }
}

/// Runs `runs` independent plays (run `r` seeded with `seed + r`) and
/// aggregates them. Each play starts in a uniformly drawn state of `C_δ`.
pub fn simulate(
    scenario: &Scenario,
    file: &StrategyFile,
    opts: &SimulateOptions,
    with_rows: bool,
) -> Result<(SimulateSummary, Vec<TraceRow>)> {
    file.verify(&scenario.game)?;
    let delay = file.strategy.delay();
    let starts = file.strategy.controllable_states(delay)?;
    if starts.is_empty() {
        return Err(Error::NothingControllable { delay });
    }
    let other = opts.compare.then(|| other_heuristic(scenario, file));
    let results: Vec<(RunMetrics, Vec<TraceRow>)> = (0..opts.runs)
        .into_par_iter()
        .map(|run| {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(run as u64));
            let s0 = starts[rng.gen_range(0..starts.len())];
            let mut rows = Vec::new();
            let m = play(scenario, &file.strategy, &file.heuristic, other.as_ref(), s0, opts.steps, run, &mut rng, with_rows.then_some(&mut rows))?;
            Ok((m, rows))
        })
        .collect::<Result<_>>()?;
    let runs = results.len().max(1) as f64;
    let per_run: Vec<RunMetrics> = results.iter().map(|(m, _)| m.clone()).collect();
    let compared: u64 = per_run.iter().map(|m| m.compared).sum();
    let summary = SimulateSummary {
        scenario: file.scenario.clone(),
        delay,
        heuristic: file.heuristic.name().to_string(),
        seed: opts.seed,
        steps: opts.steps,
        runs: opts.runs,
        mean_score: per_run.iter().map(|m| m.score as f64).sum::<f64>() / runs,
        mean_interventions: per_run.iter().map(|m| m.interventions as f64).sum::<f64>() / runs,
        collisions: per_run.iter().map(|m| m.collisions).sum(),
        fallbacks: per_run.iter().map(|m| m.fallbacks).sum(),
        agreement: (compared > 0).then(|| per_run.iter().map(|m| m.agreed).sum::<u64>() as f64 / compared as f64),
        per_run,
    };
    let rows = results.into_iter().flat_map(|(_, rows)| rows).collect();
    Ok((summary, rows))
}

/// Loads a strategy file, rebuilds its scenario and simulates it.
pub fn cmd_simulate(opts: &SimulateOptions) -> Result<SimulateSummary> {
    let file = StrategyFile::load(&opts.strategy)?;
    let name: ScenarioName = file.scenario.parse()?;
    let scenario = Scenario::build(name, opts.caps.states)?;
    let (summary, rows) = simulate(&scenario, &file, opts, opts.csv.is_some())?;
    if let Some(path) = &opts.csv {
        write_trace(path, &scenario, &rows)?;
    }
    Ok(summary)
}
