//! Experiment commands behind the `dshield` binary: synthesis, seeded
//! simulation, scripted driving and synthesis benchmarks.

pub mod bench;
pub mod drive;
pub mod simulate;
pub mod synth;

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

pub use bench::{cmd_bench, BenchOptions, BenchRow};
pub use drive::{cmd_drive, DriveOptions, DriveReport};
pub use simulate::{cmd_simulate, SimulateOptions, SimulateSummary};
pub use synth::{cmd_synth, synthesize, SynthOptions, SynthReport};

/// Environment variable overriding [`DEFAULT_STATE_CAP`].
pub const STATE_CAP_ENV: &str = "DELAYSHIELD_STATE_CAP";
pub const DEFAULT_STATE_CAP: u64 = 1 << 26;
/// Environment variable bounding the delayed solver's candidate configurations.
pub const CONFIG_CAP_ENV: &str = "DELAYSHIELD_CONFIG_CAP";
pub const DEFAULT_CONFIG_CAP: u64 = 1 << 30;

/// State and configuration limits for building and solving games.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Caps {
    pub states: u64,
    pub configs: u64,
}

impl Default for Caps {
    fn default() -> Self {
        Caps { states: DEFAULT_STATE_CAP, configs: DEFAULT_CONFIG_CAP }
    }
}

impl Caps {
    /// Reads both caps from the environment, falling back to the defaults.
    pub fn from_env() -> Result<Self> {
        Ok(Caps {
            states: env_u64(STATE_CAP_ENV, DEFAULT_STATE_CAP)?,
            configs: env_u64(CONFIG_CAP_ENV, DEFAULT_CONFIG_CAP)?,
        })
    }
}

fn env_u64(name: &str, default: u64) -> Result<u64> {
    match std::env::var(name) {
        Ok(v) => v.trim().parse().map_err(|_| Error::Format(format!("{name}={v} is not a non-negative integer"))),
        Err(_) => Ok(default),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum HeuristicKind {
    Robust,
    Control,
}

impl fmt::Display for HeuristicKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HeuristicKind::Robust => "robust",
            HeuristicKind::Control => "control",
        })
    }
}

impl FromStr for HeuristicKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "robust" => Ok(HeuristicKind::Robust),
            "control" => Ok(HeuristicKind::Control),
            _ => Err(Error::Format(format!("unknown heuristic `{s}` (expected robust or control)"))),
        }
    }
}

/// Process exit code for a failed command: 2 when the initial state is not
/// controllable, 3 on a cap or timeout, 1 otherwise.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Uncontrollable { .. } | Error::NothingControllable { .. } => 2,
        Error::CapExceeded { .. } | Error::Timeout => 3,
        _ => 1,
    }
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2.0
    }
}
