use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};
use delayshield::harness::{
    cmd_bench, cmd_drive, cmd_simulate, cmd_synth, exit_code, BenchOptions, Caps, DriveOptions, HeuristicKind,
    SimulateOptions, SynthOptions,
};
use delayshield::scenarios::ScenarioName;
use delayshield::strategy_file::StrategyFile;
use delayshield::Error;

/// Synthesize and run delay-resilient safety shields.
#[derive(Parser, Debug)]
#[command(name = "dshield", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum HeuristicArg {
    Robust,
    Control,
}

impl From<HeuristicArg> for HeuristicKind {
    fn from(h: HeuristicArg) -> Self {
        match h {
            HeuristicArg::Robust => HeuristicKind::Robust,
            HeuristicArg::Control => HeuristicKind::Control,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum BenchHeuristic {
    Robust,
    Control,
    Both,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve a scenario under delay and write the strategy file.
    Synth {
        /// intersection, pedestrian or gridworld:<n>
        #[arg(long)]
        scenario: ScenarioName,
        #[arg(long)]
        delay: usize,
        #[arg(long, value_enum, default_value = "robust")]
        heuristic: HeuristicArg,
        /// Cut-off for the controllability heuristic (default max(3, delay)).
        #[arg(long)]
        delta_max: Option<usize>,
        #[arg(long)]
        out: PathBuf,
        /// Also write a JSON debug dump of the strategy.
        #[arg(long)]
        json: Option<PathBuf>,
        /// Give up after this many seconds.
        #[arg(long)]
        timeout: Option<f64>,
    },
    /// Run seeded shielded plays from a strategy file.
    Simulate {
        #[arg(long)]
        strategy: PathBuf,
        #[arg(long)]
        steps: usize,
        #[arg(long)]
        runs: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Measure how often the other heuristic picks the same correction.
        #[arg(long)]
        compare: bool,
    },
    /// Drive a reckless car under the shield from a given state.
    Drive {
        #[arg(long)]
        scenario: ScenarioName,
        #[arg(long)]
        delay: usize,
        /// Comma-separated name=value pairs, e.g. p_agent=100,v_agent=20,p_env=90,v_env=20
        #[arg(long)]
        init: String,
        #[arg(long)]
        steps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Time synthesis for every delay up to a maximum.
    Bench {
        #[arg(long)]
        scenario: ScenarioName,
        #[arg(long)]
        max_delay: usize,
        #[arg(long, default_value_t = 3)]
        reps: usize,
        #[arg(long, value_enum, default_value = "both")]
        heuristic: BenchHeuristic,
        /// δ_max for controllability shields (default max-delay).
        #[arg(long)]
        delta_max: Option<usize>,
        #[arg(long)]
        timeout: Option<f64>,
    },
}

fn seconds(t: Option<f64>) -> Result<Option<Duration>, Error> {
    t.map(|s| Duration::try_from_secs_f64(s).map_err(|_| Error::Format(format!("bad timeout {s}")))).transpose()
}

fn print_json(value: &impl serde::Serialize) -> Result<(), Error> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Format(e.to_string()))?;
    writeln!(io::stdout(), "{text}").map_err(|e| Error::Io { path: "<stdout>".into(), source: e })
}

fn run(cli: Cli) -> Result<(), Error> {
    let caps = Caps::from_env()?;
    match cli.command {
        Command::Synth { scenario, delay, heuristic, delta_max, out, json, timeout } => {
            let opts = SynthOptions {
                scenario,
                delay,
                heuristic: heuristic.into(),
                delta_max,
                caps,
                deadline: seconds(timeout)?.map(|d| Instant::now() + d),
            };
            cmd_synth(&opts, &out, &mut io::stdout())?;
            if let Some(path) = json {
                let file = StrategyFile::load(&out)?;
                let text = serde_json::to_string_pretty(&file.to_json(1000)).map_err(|e| Error::Format(e.to_string()))?;
                std::fs::write(&path, text).map_err(|e| Error::Io { path, source: e })?;
            }
        }
        Command::Simulate { strategy, steps, runs, seed, csv, compare } => {
            let summary = cmd_simulate(&SimulateOptions { strategy, steps, runs, seed, csv, compare, caps })?;
            print_json(&summary)?;
        }
        Command::Drive { scenario, delay, init, steps, seed, csv } => {
            let report = cmd_drive(&DriveOptions { scenario, delay, init, steps, seed, csv, caps })?;
            print_json(&report)?;
        }
        Command::Bench { scenario, max_delay, reps, heuristic, delta_max, timeout } => {
            let heuristics = match heuristic {
                BenchHeuristic::Robust => vec![HeuristicKind::Robust],
                BenchHeuristic::Control => vec![HeuristicKind::Control],
                BenchHeuristic::Both => vec![HeuristicKind::Robust, HeuristicKind::Control],
            };
            let opts = BenchOptions { scenario, max_delay, reps, heuristics, delta_max, caps, budget: seconds(timeout)? };
            cmd_bench(&opts, &mut io::stdout())?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
