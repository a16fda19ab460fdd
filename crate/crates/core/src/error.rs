use std::path::PathBuf;

use thiserror::Error;

use crate::game::{ParseError, Violation};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("invalid game: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),

    #[error("{what} id {id} out of range (must be < {bound})")]
    OutOfRange {
        what: &'static str,
        id: u64,
        bound: u64,
    },

    #[error("action buffer has length {got}, expected {expected}")]
    BufferLength { expected: usize, got: usize },

    #[error("warm-up query with {partial} buffered actions is only valid below delay {delay}")]
    WarmupOver { partial: usize, delay: usize },

    #[error("delay level {level} exceeds the solved delay {delay}")]
    DelayOutOfRange { level: usize, delay: usize },

    #[error("no safe action available")]
    NoSafeAction,

    #[error("observation protocol violated at step {step}: {reason}")]
    Protocol { step: u64, reason: &'static str },

    #[error("{what} count {count} exceeds the cap of {cap}")]
    CapExceeded {
        what: &'static str,
        count: u64,
        cap: u64,
    },

    #[error("time budget exhausted")]
    Timeout,

    #[error("initial state {state} is not controllable under delay {delay}")]
    Uncontrollable { state: u64, delay: usize },

    #[error("no state is controllable under delay {delay}")]
    NothingControllable { delay: usize },

    #[error("unknown scenario `{0}` (expected intersection, pedestrian or gridworld:<n>)")]
    UnknownScenario(String),

    #[error("bad initial state: {0}")]
    BadInitialState(String),

    #[error("strategy file: {0}")]
    Format(String),

    #[error("strategy file fingerprint {found} does not match game fingerprint {expected}")]
    FingerprintMismatch { expected: String, found: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
