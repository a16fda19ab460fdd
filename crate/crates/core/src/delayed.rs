//! Safety games under worst-case observation delay.
//!
//! A configuration `(s, α)` at level `k` pairs the last observed state `s` with
//! the `k` actions already committed but not yet observed (oldest first).
//! `Win_k` is the greatest set of configurations with `s` safe and
//! `∀i ∃a: (succ(s, i, α₁), α₂..α_k·a) ∈ Win_k`.
//!
//! Levels are computed incrementally. Every configuration of `Win_{k+1}` has its
//! length-`k` prefix in `Win_k`, so level `k+1` starts from `Win_k × A` rather
//! than from all of `S × A^{k+1}`, and is then pruned to its greatest fixpoint.
//! Pruning is a backward worklist over "groups": the group `(s', γ)` collects
//! the configurations `(s', γ·a)`, and a configuration dies as soon as one of
//! the groups it can move into has no surviving member.
//!
//! Configuration ids at level `k` use the compaction of that level's state set:
//! `id = compact(s) · |A|^k + Σ_j α_j · |A|^{k-1-j}`.

use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::bits::{ActionSet, BitSet};
use crate::error::{Error, Result};
use crate::game::{check_id, ActionId, GameGraph, InputId, StateId};
use crate::solver::winning_region;

/// Marks a state absent from a level's compaction.
pub const NOT_PRESENT: u32 = u32::MAX;

/// One delay level: the projection `C_k` (as a compaction map) and `Win_k`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Level {
    states: Vec<StateId>,
    index: Vec<u32>,
    win: BitSet,
}

impl Level {
    /// Rebuilds a level from its sorted state list and bitset.
    pub fn from_parts(num_states: usize, states: Vec<StateId>, win: BitSet, width: usize) -> Result<Self> {
        if states.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Format("level state list is not strictly ascending".into()));
        }
        if states.last().is_some_and(|&s| s as usize >= num_states) {
            return Err(Error::Format("level state id out of range".into()));
        }
        if win.len() != states.len() * width {
            return Err(Error::Format(format!(
                "level bitset has {} bits, expected {}",
                win.len(),
                states.len() * width
            )));
        }
        let mut index = vec![NOT_PRESENT; num_states];
        for (cs, &s) in states.iter().enumerate() {
            index[s as usize] = cs as u32;
        }
        Ok(Level { states, index, win })
    }

    /// `C_k` in ascending order; position in this slice is the compact id.
    pub fn states(&self) -> &[StateId] {
        &self.states
    }

    pub fn win(&self) -> &BitSet {
        &self.win
    }

    #[inline]
    pub fn compact(&self, s: StateId) -> Option<usize> {
        match self.index[s as usize] {
            NOT_PRESENT => None,
            cs => Some(cs as usize),
        }
    }

    pub fn config_count(&self) -> usize {
        self.win.count_ones()
    }
}

/// Knobs for long-running solves.
#[derive(Clone, Debug)]
pub struct SolveOptions {
    /// Upper bound on candidate configurations per level.
    pub max_configs: u64,
    pub deadline: Option<Instant>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { max_configs: u64::MAX, deadline: None }
    }
}

/// Wall-clock and size per solved level.
#[derive(Clone, Debug, Default)]
pub struct SolveStats {
    pub level_times: Vec<Duration>,
    pub candidates: Vec<u64>,
    pub winning_configs: Vec<u64>,
}

/// `Win_0 ..= Win_δ` for one game.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DelayedStrategy {
    delay: usize,
    num_states: usize,
    num_inputs: usize,
    num_actions: usize,
    levels: Vec<Level>,
}

pub fn solve_delayed(game: &GameGraph, delta: usize) -> DelayedStrategy {
    solve_delayed_with(game, delta, &SolveOptions::default())
        .expect("unbounded solve has no failure modes")
        .0
}

pub fn solve_delayed_with(
    game: &GameGraph,
    delta: usize,
    opts: &SolveOptions,
) -> Result<(DelayedStrategy, SolveStats)> {
    let mut stats = SolveStats::default();
    let started = Instant::now();
    let winning = winning_region(game);
    let states: Vec<StateId> = (0..game.num_states() as StateId)
        .filter(|&s| winning[s as usize])
        .collect();
    let win = BitSet::full(states.len());
    let level0 = Level::from_parts(game.num_states(), states, win, 1)?;
    stats.level_times.push(started.elapsed());
    stats.candidates.push(game.num_states() as u64);
    stats.winning_configs.push(level0.config_count() as u64);

    let mut levels = vec![level0];
    let preds = (delta > 0).then(|| game.predecessors());
    for k in 0..delta {
        check_deadline(opts)?;
        let started = Instant::now();
        let prev = &levels[k];
        let candidates = (game.num_actions() as u64)
            .checked_pow(k as u32 + 1)
            .and_then(|w| w.checked_mul(prev.states.len() as u64))
            .unwrap_or(u64::MAX);
        if candidates > opts.max_configs || candidates > usize::MAX as u64 {
            return Err(Error::CapExceeded { what: "configuration", count: candidates, cap: opts.max_configs });
        }
        let next = lift(game, preds.as_ref().unwrap(), prev, k, opts)?;
        stats.level_times.push(started.elapsed());
        stats.candidates.push(candidates);
        stats.winning_configs.push(next.config_count() as u64);
        levels.push(next);
    }
    let strategy = DelayedStrategy {
        delay: delta,
        num_states: game.num_states(),
        num_inputs: game.num_inputs(),
        num_actions: game.num_actions(),
        levels,
    };
    Ok((strategy, stats))
}

fn check_deadline(opts: &SolveOptions) -> Result<()> {
    match opts.deadline {
        Some(d) if Instant::now() >= d => Err(Error::Timeout),
        _ => Ok(()),
    }
}

pub(crate) fn pow(base: usize, exp: usize) -> usize {
    base.pow(exp as u32)
}

/// Computes `Win_{k+1}` from `Win_k` (`prev`).
fn lift(
    game: &GameGraph,
    preds: &crate::game::Predecessors,
    prev: &Level,
    k: usize,
    opts: &SolveOptions,
) -> Result<Level> {
    let na = game.num_actions();
    let ni = game.num_inputs();
    let group_width = pow(na, k);
    let width = group_width * na;
    let n = prev.states.len();
    let total = n * width;

    // Candidates: every winning level-k configuration extended by any action.
    // With a shared compaction, extending id g by action a gives g·|A| + a.
    let mut alive = BitSet::new(total);
    let mut counts = vec![0u8; n * group_width];
    for g in prev.win.ones() {
        counts[g] = na as u8;
        for a in 0..na {
            alive.set(g * na + a);
        }
    }

    // Configurations with a successor group that is empty from the start.
    let mut doomed = BitSet::new(total);
    doomed
        .words_mut()
        .par_iter_mut()
        .enumerate()
        .for_each(|(w, word)| {
            let live = alive.words()[w];
            let mut bits = live;
            while bits != 0 {
                let b = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                let c = w * 64 + b;
                let (cs, buf) = (c / width, c % width);
                let s = prev.states[cs];
                let (first, rest) = (buf / group_width, buf % group_width);
                let dead = (0..ni as InputId).any(|i| {
                    let t = game.successor(s, i, first as ActionId);
                    match prev.index[t as usize] {
                        NOT_PRESENT => true,
                        ct => counts[ct as usize * group_width + rest] == 0,
                    }
                });
                if dead {
                    *word |= 1u64 << b;
                }
            }
        });

    let mut exhausted: Vec<usize> = Vec::new();
    for c in doomed.ones() {
        kill(c, na, &mut alive, &mut counts, &mut exhausted);
    }
    drop(doomed);

    let mut steps = 0usize;
    while let Some(g) = exhausted.pop() {
        steps += 1;
        if steps & 0xFFFF == 0 {
            check_deadline(opts)?;
        }
        // Group (s', γ) is empty: any (p, b·γ) with succ(p, i, b) = s' for some i dies.
        let (target_cs, gamma) = (g / group_width, g % group_width);
        let target = prev.states[target_cs];
        for &e in preds.of(target) {
            let (p, _, b) = game.edge_parts(e);
            let cp = prev.index[p as usize];
            if cp == NOT_PRESENT {
                continue;
            }
            let c = cp as usize * width + b as usize * group_width + gamma;
            if alive.get(c) {
                kill(c, na, &mut alive, &mut counts, &mut exhausted);
            }
        }
    }

    // Recompact onto the states that kept at least one configuration.
    let mut states = Vec::new();
    for (cs, &s) in prev.states.iter().enumerate() {
        if alive.any_in(cs * width, (cs + 1) * width) {
            states.push(s);
        }
    }
    let mut win = BitSet::new(states.len() * width);
    let mut new_cs = 0usize;
    let mut last_cs = usize::MAX;
    for c in alive.ones() {
        let cs = c / width;
        if cs != last_cs {
            if last_cs != usize::MAX {
                new_cs += 1;
            }
            last_cs = cs;
        }
        win.set(new_cs * width + c % width);
    }
    Level::from_parts(game.num_states(), states, win, width)
}

fn kill(c: usize, na: usize, alive: &mut BitSet, counts: &mut [u8], exhausted: &mut Vec<usize>) {
    alive.clear(c);
    let g = c / na;
    counts[g] -= 1;
    if counts[g] == 0 {
        exhausted.push(g);
    }
}

/// Encodes an action buffer with the oldest action most significant.
pub fn encode_buffer(buffer: &[ActionId], num_actions: usize) -> usize {
    buffer.iter().fold(0, |acc, &a| acc * num_actions + a as usize)
}

pub fn decode_buffer(mut code: usize, len: usize, num_actions: usize) -> Vec<ActionId> {
    let mut out = vec![0; len];
    for slot in out.iter_mut().rev() {
        *slot = (code % num_actions) as ActionId;
        code /= num_actions;
    }
    out
}

impl DelayedStrategy {
    /// Reassembles a strategy from stored levels; level `k`'s bitset must span
    /// `|C_k| · |A|^k` bits.
    pub fn from_levels(
        num_states: usize,
        num_inputs: usize,
        num_actions: usize,
        levels: Vec<Level>,
    ) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::Format("strategy has no levels".into()));
        }
        for (k, level) in levels.iter().enumerate() {
            if level.index.len() != num_states || level.win.len() != level.states.len() * pow(num_actions, k) {
                return Err(Error::Format(format!("level {k} has inconsistent dimensions")));
            }
        }
        Ok(DelayedStrategy { delay: levels.len() - 1, num_states, num_inputs, num_actions, levels })
    }

    pub fn delay(&self) -> usize {
        self.delay
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_inputs(&self) -> usize {
        self.num_inputs
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    pub fn level(&self, k: usize) -> Result<&Level> {
        self.levels.get(k).ok_or(Error::DelayOutOfRange { level: k, delay: self.delay })
    }

    /// The same solution restricted to delays `0..=delta`.
    pub fn truncated(&self, delta: usize) -> Result<DelayedStrategy> {
        if delta > self.delay {
            return Err(Error::DelayOutOfRange { level: delta, delay: self.delay });
        }
        Ok(DelayedStrategy { delay: delta, levels: self.levels[..=delta].to_vec(), ..*self })
    }

    /// `s ∈ C_k`.
    pub fn controllable_under(&self, s: StateId, k: usize) -> Result<bool> {
        check_id("state", s, self.num_states)?;
        Ok(self.level(k)?.compact(s).is_some())
    }

    /// `C_k` in ascending order.
    pub fn controllable_states(&self, k: usize) -> Result<&[StateId]> {
        Ok(self.level(k)?.states())
    }

    /// `(s, buffer) ∈ Win_k` where `k = buffer.len()`.
    pub fn contains(&self, s: StateId, buffer: &[ActionId]) -> Result<bool> {
        check_id("state", s, self.num_states)?;
        for &a in buffer {
            check_id("action", a, self.num_actions)?;
        }
        let level = self.level(buffer.len())?;
        Ok(match level.compact(s) {
            None => false,
            Some(cs) => level.win.get(cs * pow(self.num_actions, buffer.len()) + encode_buffer(buffer, self.num_actions)),
        })
    }

    /// All members of `Win_k`, in config-id order.
    pub fn configs(&self, k: usize) -> Result<Vec<(StateId, Vec<ActionId>)>> {
        let level = self.level(k)?;
        let width = pow(self.num_actions, k);
        Ok(level
            .win
            .ones()
            .map(|c| (level.states[c / width], decode_buffer(c % width, k, self.num_actions)))
            .collect())
    }

    fn check_buffer(&self, buffer: &[ActionId]) -> Result<()> {
        for &a in buffer {
            check_id("action", a, self.num_actions)?;
        }
        Ok(())
    }

    /// Actions the shield may emit after observing `(s, i)` with `buffer`
    /// (length δ) pending: `{ a | (succ(s, i, buffer₁), buffer₂..·a) ∈ Win_δ }`.
    /// For δ = 0 this is `{ a | succ(s, i, a) ∈ Win_0 }`.
    pub fn allowed_delayed(&self, game: &GameGraph, s: StateId, i: InputId, buffer: &[ActionId]) -> Result<ActionSet> {
        game.check_state(s)?;
        game.check_input(i)?;
        if buffer.len() != self.delay {
            return Err(Error::BufferLength { expected: self.delay, got: buffer.len() });
        }
        self.check_buffer(buffer)?;
        let top = &self.levels[self.delay];
        let na = self.num_actions;
        if self.delay == 0 {
            return Ok((0..na as ActionId)
                .filter(|&a| top.compact(game.successor(s, i, a)).is_some())
                .collect());
        }
        let next = game.successor(s, i, buffer[0]);
        let Some(cs) = top.compact(next) else {
            return Ok(ActionSet::EMPTY);
        };
        let base = (cs * pow(na, self.delay - 1) + encode_buffer(&buffer[1..], na)) * na;
        Ok((0..na).filter(|&a| top.win.get(base + a)).map(|a| a as ActionId).collect())
    }

    /// Start-of-play legality at step `t = partial.len() < δ`, when only the
    /// initial state `s0` has been observed: actions `a` such that
    /// `(s0, partial·a)` is a prefix of some configuration in `Win_δ`.
    ///
    /// Every such prefix lies in `Win_{t+1}`; restricting to prefixes that extend
    /// to `Win_δ` keeps warm-up from reaching a dead end before step δ.
    pub fn allowed_warmup(&self, s0: StateId, partial: &[ActionId]) -> Result<ActionSet> {
        check_id("state", s0, self.num_states)?;
        if partial.len() >= self.delay {
            return Err(Error::WarmupOver { partial: partial.len(), delay: self.delay });
        }
        self.check_buffer(partial)?;
        let top = &self.levels[self.delay];
        let Some(cs) = top.compact(s0) else {
            return Ok(ActionSet::EMPTY);
        };
        let na = self.num_actions;
        let span = pow(na, self.delay - partial.len() - 1);
        let prefix = encode_buffer(partial, na);
        let base = cs * pow(na, self.delay);
        Ok((0..na)
            .filter(|&a| {
                let start = base + (prefix * na + a) * span;
                top.win.any_in(start, start + span)
            })
            .map(|a| a as ActionId)
            .collect())
    }
}
