//! Versioned little-endian binary storage for solved shields.
//!
//! Layout: magic `DSHS`, version, scenario name, SHA-256 of the game's
//! canonical text, game dimensions, delay, then for each level `k ≤ δ` the
//! sorted `C_k` state list followed by the `Win_k` bitset words, then the
//! heuristic map.

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde_json::json;
use sha2::{Digest, Sha256};

use crate::bits::BitSet;
use crate::delayed::{DelayedStrategy, Level};
use crate::error::{Error, Result};
use crate::game::GameGraph;
use crate::shield::{ControllabilityMap, Heuristic, RobustnessMap};

const MAGIC: &[u8; 4] = b"DSHS";
pub const VERSION: u32 = 1;

const KIND_ROBUST: u8 = 0;
const KIND_CONTROL: u8 = 1;

/// SHA-256 of [`GameGraph::write_canonical`].
pub fn fingerprint(game: &GameGraph) -> [u8; 32] {
    let mut hasher = BufWriter::with_capacity(1 << 16, Sha256::new());
    game.write_canonical(&mut hasher).expect("hashing cannot fail");
    let hasher = hasher.into_inner().map_err(|_| ()).expect("hashing cannot fail");
    hasher.finalize().into()
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StrategyFile {
    pub scenario: String,
    pub fingerprint: [u8; 32],
    pub strategy: DelayedStrategy,
    pub heuristic: Heuristic,
}

impl StrategyFile {
    pub fn new(scenario: impl Into<String>, game: &GameGraph, strategy: DelayedStrategy, heuristic: Heuristic) -> Self {
        StrategyFile { scenario: scenario.into(), fingerprint: fingerprint(game), strategy, heuristic }
    }

    pub fn write_to<W: Write>(&self, out: &mut W) -> io::Result<()> {
        let d = &self.strategy;
        out.write_all(MAGIC)?;
        out.write_all(&VERSION.to_le_bytes())?;
        out.write_all(&(self.scenario.len() as u32).to_le_bytes())?;
        out.write_all(self.scenario.as_bytes())?;
        out.write_all(&self.fingerprint)?;
        out.write_all(&(d.num_states() as u64).to_le_bytes())?;
        out.write_all(&(d.num_inputs() as u32).to_le_bytes())?;
        out.write_all(&(d.num_actions() as u32).to_le_bytes())?;
        out.write_all(&(d.delay() as u32).to_le_bytes())?;
        for level in d.levels() {
            out.write_all(&(level.states().len() as u64).to_le_bytes())?;
            for &s in level.states() {
                out.write_all(&s.to_le_bytes())?;
            }
            for &w in level.win().words() {
                out.write_all(&w.to_le_bytes())?;
            }
        }
        match &self.heuristic {
            Heuristic::Robustness(m) => {
                out.write_all(&[KIND_ROBUST])?;
                for &v in m.raw() {
                    out.write_all(&v.to_le_bytes())?;
                }
            }
            Heuristic::Controllability(m) => {
                out.write_all(&[KIND_CONTROL])?;
                out.write_all(&(m.delta_max() as u32).to_le_bytes())?;
                out.write_all(&m.raw().iter().map(|&v| v as u8).collect::<Vec<_>>())?;
            }
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.write_to(&mut out).expect("writing to memory cannot fail");
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        self.write_to(&mut out).and_then(|_| out.flush()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(Error::Format("not a strategy file (bad magic)".into()));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        let name_len = r.u32()? as usize;
        let scenario = String::from_utf8(r.take(name_len)?.to_vec())
            .map_err(|_| Error::Format("scenario name is not UTF-8".into()))?;
        let fingerprint: [u8; 32] = r.take(32)?.try_into().unwrap();
        let n = r.u64()?;
        let num_states = r.count(n, 1)?;
        let num_inputs = r.u32()? as usize;
        let num_actions = r.u32()? as usize;
        let delay = r.u32()? as usize;
        if num_actions == 0 || delay > 64 {
            return Err(Error::Format("bad dimensions".into()));
        }
        let mut levels = Vec::with_capacity(delay + 1);
        for k in 0..=delay {
            let n = r.u64()?;
            let count = r.count(n, 4)?;
            let states = (0..count).map(|_| r.u32()).collect::<Result<Vec<_>>>()?;
            let width = num_actions
                .checked_pow(k as u32)
                .ok_or_else(|| Error::Format("level size overflows".into()))?;
            let bits = count.checked_mul(width).ok_or_else(|| Error::Format("level size overflows".into()))?;
            let words = (0..r.count(bits.div_ceil(64) as u64, 8)?).map(|_| r.u64()).collect::<Result<Vec<_>>>()?;
            let win = BitSet::from_words(bits, words).ok_or_else(|| Error::Format(format!("level {k} bitset has stray bits")))?;
            levels.push(Level::from_parts(num_states, states, win, width)?);
        }
        let strategy = DelayedStrategy::from_levels(num_states, num_inputs, num_actions, levels)?;
        let heuristic = match r.take(1)?[0] {
            KIND_ROBUST => {
                r.count(num_states as u64, 4)?;
                Heuristic::Robustness(RobustnessMap::from_raw(
                    (0..num_states).map(|_| r.u32()).collect::<Result<Vec<_>>>()?,
                ))
            }
            KIND_CONTROL => {
                let delta_max = r.u32()? as usize;
                if delta_max < delay || delta_max > i8::MAX as usize {
                    return Err(Error::Format(format!("δ_max {delta_max} is incompatible with delay {delay}")));
                }
                let values: Vec<i8> = r.take(num_states)?.iter().map(|&b| b as i8).collect();
                if values.iter().any(|&v| v < -1 || v as i64 > delta_max as i64) {
                    return Err(Error::Format("controllability value out of range".into()));
                }
                Heuristic::Controllability(ControllabilityMap::from_raw(delta_max, values))
            }
            kind => return Err(Error::Format(format!("unknown heuristic kind {kind}"))),
        };
        if r.pos != bytes.len() {
            return Err(Error::Format(format!("{} trailing bytes", bytes.len() - r.pos)));
        }
        Ok(StrategyFile { scenario, fingerprint, strategy, heuristic })
    }

    /// Fails unless the file was solved for exactly this game.
    pub fn verify(&self, game: &GameGraph) -> Result<()> {
        let expected = fingerprint(game);
        if expected != self.fingerprint {
            return Err(Error::FingerprintMismatch { expected: hex(&expected), found: hex(&self.fingerprint) });
        }
        Ok(())
    }

    /// Human-readable dump for debugging; configurations are listed only up to `limit` per level.
    pub fn to_json(&self, limit: usize) -> serde_json::Value {
        let d = &self.strategy;
        let levels: Vec<_> = (0..=d.delay())
            .map(|k| {
                let configs = d.configs(k).unwrap_or_default();
                json!({
                    "level": k,
                    "controllable_states": d.level(k).map(|l| l.states().len()).unwrap_or(0),
                    "winning_configs": configs.len(),
                    "configs": configs.iter().take(limit).map(|(s, b)| json!([s, b])).collect::<Vec<_>>(),
                })
            })
            .collect();
        let heuristic = match &self.heuristic {
            Heuristic::Robustness(m) => json!({
                "kind": "robust",
                "values": m.raw().iter().take(limit).map(|&v| if v == u32::MAX { None } else { Some(v) }).collect::<Vec<_>>(),
            }),
            Heuristic::Controllability(m) => json!({
                "kind": "control",
                "delta_max": m.delta_max(),
                "values": m.raw().iter().take(limit).collect::<Vec<_>>(),
            }),
        };
        json!({
            "version": VERSION,
            "scenario": self.scenario,
            "fingerprint": hex(&self.fingerprint),
            "num_states": d.num_states(),
            "num_inputs": d.num_inputs(),
            "num_actions": d.num_actions(),
            "delay": d.delay(),
            "levels": levels,
            "heuristic": heuristic,
        })
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::Format("unexpected end of file".into()))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    /// Rejects element counts that cannot fit in the remaining bytes.
    fn count(&self, n: u64, elem_size: u64) -> Result<usize> {
        let remaining = (self.bytes.len() - self.pos) as u64;
        match n.checked_mul(elem_size) {
            Some(total) if total <= remaining => Ok(n as usize),
            _ => Err(Error::Format(format!("count {n} exceeds file size"))),
        }
    }
}
