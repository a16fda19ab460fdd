use std::io::Write;
use std::path::Path;
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::delayed::{solve_delayed_with, SolveOptions};
use crate::error::{Error, Result};
use crate::scenarios::{Scenario, ScenarioName};
use crate::shield::{robustness_values, ControllabilityMap, Heuristic};
use crate::strategy_file::StrategyFile;

use super::{Caps, HeuristicKind};

/// Largest delay accepted on the command line; buffers are stored per level.
pub const MAX_DELAY: usize = 64;
/// δ_max used for the controllability heuristic when none is given.
pub const DEFAULT_DELTA_MAX: usize = 3;

#[derive(Clone, Debug)]
pub struct SynthOptions {
    pub scenario: ScenarioName,
    pub delay: usize,
    pub heuristic: HeuristicKind,
    pub delta_max: Option<usize>,
    pub caps: Caps,
    pub deadline: Option<Instant>,
}

impl SynthOptions {
    pub fn new(scenario: ScenarioName, delay: usize, heuristic: HeuristicKind) -> Self {
        SynthOptions { scenario, delay, heuristic, delta_max: None, caps: Caps::default(), deadline: None }
    }

    /// Depth the game is solved to: δ, or δ_max for the controllability heuristic.
    pub fn solve_depth(&self) -> Result<usize> {
        if self.delay > MAX_DELAY {
            return Err(Error::DelayOutOfRange { level: self.delay, delay: MAX_DELAY });
        }
        match self.heuristic {
            HeuristicKind::Robust => Ok(self.delay),
            HeuristicKind::Control => {
                let m = self.delta_max.unwrap_or(DEFAULT_DELTA_MAX.max(self.delay));
                if m < self.delay || m > MAX_DELAY {
                    return Err(Error::DelayOutOfRange { level: self.delay, delay: m.min(MAX_DELAY) });
                }
                Ok(m)
            }
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SynthReport {
    pub scenario: String,
    pub delay: usize,
    pub heuristic: String,
    pub solved_to: usize,
    pub build_secs: f64,
    pub solve_secs: f64,
    pub level_secs: Vec<f64>,
    pub heuristic_secs: f64,
    pub write_secs: f64,
    pub controllable_states: Vec<usize>,
    pub winning_configs: Vec<u64>,
}

impl SynthReport {
    /// Solve plus heuristic time: the synthesis cost proper.
    pub fn synthesis_secs(&self) -> f64 {
        self.solve_secs + self.heuristic_secs
    }
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

/// Builds and solves a scenario without touching the filesystem.
pub fn synthesize(opts: &SynthOptions) -> Result<(Scenario, StrategyFile, SynthReport)> {
    let depth = opts.solve_depth()?;
    let t = Instant::now();
    let scenario = Scenario::build(opts.scenario, opts.caps.states)?;
    let build = t.elapsed();

    let t = Instant::now();
    let solve_opts = SolveOptions { max_configs: opts.caps.configs, deadline: opts.deadline };
    let (solved, stats) = solve_delayed_with(&scenario.game, depth, &solve_opts)?;
    let solve = t.elapsed();
    let controllable_states = solved.levels().iter().map(|l| l.states().len()).collect();

    let t = Instant::now();
    let (strategy, heuristic) = match opts.heuristic {
        HeuristicKind::Robust => (solved, Heuristic::Robustness(robustness_values(&scenario.game))),
        HeuristicKind::Control => {
            let map = ControllabilityMap::from_strategy(&solved);
            (solved.truncated(opts.delay)?, Heuristic::Controllability(map))
        }
    };
    let heuristic_time = t.elapsed();

    let report = SynthReport {
        scenario: opts.scenario.to_string(),
        delay: opts.delay,
        heuristic: opts.heuristic.to_string(),
        solved_to: depth,
        build_secs: secs(build),
        solve_secs: secs(solve),
        level_secs: stats.level_times.iter().copied().map(secs).collect(),
        heuristic_secs: secs(heuristic_time),
        write_secs: 0.0,
        controllable_states,
        winning_configs: stats.winning_configs.clone(),
    };
    let file = StrategyFile::new(opts.scenario.to_string(), &scenario.game, strategy, heuristic);
    Ok((scenario, file, report))
}

/// Solves, writes the strategy file and prints one line per phase to `log`.
pub fn cmd_synth(opts: &SynthOptions, out: &Path, log: &mut impl Write) -> Result<SynthReport> {
    let (_, file, mut report) = synthesize(opts)?;
    let t = Instant::now();
    file.save(out)?;
    report.write_secs = secs(t.elapsed());
    let line = |log: &mut dyn Write, s: String| writeln!(log, "{s}").map_err(|e| Error::io("<log>", e));
    line(log, format!("scenario {} delay {} heuristic {}", report.scenario, report.delay, report.heuristic))?;
    line(log, format!("build      {:>10.3} s", report.build_secs))?;
    for (k, s) in report.level_secs.iter().enumerate() {
        line(log, format!("solve k={k:<3}{s:>10.3} s  winning configs {}", report.winning_configs[k]))?;
    }
    line(log, format!("heuristic  {:>10.3} s", report.heuristic_secs))?;
    line(log, format!("write      {:>10.3} s", report.write_secs))?;
    line(log, format!("controllable states per level {:?}", report.controllable_states))?;
    Ok(report)
}
