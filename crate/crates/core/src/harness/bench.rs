use std::io::Write;
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::delayed::{solve_delayed_with, SolveOptions};
use crate::error::{Error, Result};
use crate::scenarios::{Scenario, ScenarioName};
use crate::shield::{robustness_values, ControllabilityMap};

use super::synth::MAX_DELAY;
use super::{median, Caps, HeuristicKind};

#[derive(Clone, Debug)]
pub struct BenchOptions {
    pub scenario: ScenarioName,
    pub max_delay: usize,
    pub reps: usize,
    pub heuristics: Vec<HeuristicKind>,
    /// δ_max for controllability shields; defaults to `max_delay`.
    pub delta_max: Option<usize>,
    pub caps: Caps,
    /// Wall-clock budget for the whole benchmark.
    pub budget: Option<Duration>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchRow {
    pub scenario: String,
    pub heuristic: String,
    pub delay: usize,
    pub solved_to: usize,
    pub reps: usize,
    pub median_secs: f64,
}

/// Times synthesis for every δ ≤ `max_delay`. Robustness shields solve to δ
/// itself; controllability shields always solve to δ_max.
pub fn bench(opts: &BenchOptions) -> Result<Vec<BenchRow>> {
    if opts.reps == 0 {
        return Err(Error::Format("reps must be at least 1".into()));
    }
    let delta_max = opts.delta_max.unwrap_or(opts.max_delay);
    if opts.max_delay > MAX_DELAY || delta_max > MAX_DELAY || delta_max < opts.max_delay {
        return Err(Error::DelayOutOfRange { level: opts.max_delay, delay: delta_max.min(MAX_DELAY) });
    }
    let deadline = opts.budget.map(|b| Instant::now() + b);
    let scenario = Scenario::build(opts.scenario, opts.caps.states)?;
    let game = &scenario.game;
    let solve_opts = SolveOptions { max_configs: opts.caps.configs, deadline };
    let mut rows = Vec::new();
    for &kind in &opts.heuristics {
        for delay in 0..=opts.max_delay {
            let depth = match kind {
                HeuristicKind::Robust => delay,
                HeuristicKind::Control => delta_max,
            };
            let mut times = Vec::with_capacity(opts.reps);
            for _ in 0..opts.reps {
                let t = Instant::now();
                let (solved, _) = solve_delayed_with(game, depth, &solve_opts)?;
                match kind {
                    HeuristicKind::Robust => drop(robustness_values(game)),
                    HeuristicKind::Control => {
                        drop(ControllabilityMap::from_strategy(&solved));
                        drop(solved.truncated(delay)?);
                    }
                }
                times.push(t.elapsed().as_secs_f64());
            }
            rows.push(BenchRow {
                scenario: opts.scenario.to_string(),
                heuristic: kind.to_string(),
                delay,
                solved_to: depth,
                reps: opts.reps,
                median_secs: median(times),
            });
        }
    }
    Ok(rows)
}

/// Runs [`bench`] and prints the table as CSV.
pub fn cmd_bench(opts: &BenchOptions, out: &mut impl Write) -> Result<Vec<BenchRow>> {
    let rows = bench(opts)?;
    let mut w = csv::Writer::from_writer(out);
    for r in &rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io("<stdout>", e))?;
    Ok(rows)
}
