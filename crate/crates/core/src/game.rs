//! Explicit-state two-player safety games and their line-oriented text format.
//!
//! A game has dense ids for states, environment inputs and agent actions and a
//! total transition function `(state, input, action) -> state`. The text format:
//!
//! ```text
//! game <num_states> <num_inputs> <num_actions>
//! unsafe <id> <id> ...
//! t <s> <i> <a> <s'>
//! sl <id> <name>      # optional state label, likewise `il` and `al`
//! ```
//!
//! `#` starts a comment anywhere on a line.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{self, Write};

use thiserror::Error;

use crate::bits::MAX_ACTIONS;
use crate::error::{Error, Result};

pub type StateId = u32;
pub type InputId = u32;
pub type ActionId = u32;

/// The delayed information unit delivered to a shield: a state and the input
/// the environment played in it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Observation {
    pub state: StateId,
    pub input: InputId,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LabelKind {
    State,
    Input,
    Action,
}

impl LabelKind {
    fn keyword(self) -> &'static str {
        match self {
            LabelKind::State => "sl",
            LabelKind::Input => "il",
            LabelKind::Action => "al",
        }
    }
}

impl fmt::Display for LabelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LabelKind::State => "state",
            LabelKind::Input => "input",
            LabelKind::Action => "action",
        })
    }
}

/// Optional human-readable names, keyed by id.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Labels {
    pub states: BTreeMap<u32, String>,
    pub inputs: BTreeMap<u32, String>,
    pub actions: BTreeMap<u32, String>,
}

impl Labels {
    pub fn get(&self, kind: LabelKind) -> &BTreeMap<u32, String> {
        match kind {
            LabelKind::State => &self.states,
            LabelKind::Input => &self.inputs,
            LabelKind::Action => &self.actions,
        }
    }

    fn get_mut(&mut self, kind: LabelKind) -> &mut BTreeMap<u32, String> {
        match kind {
            LabelKind::State => &mut self.states,
            LabelKind::Input => &mut self.inputs,
            LabelKind::Action => &mut self.actions,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty() && self.inputs.is_empty() && self.actions.is_empty()
    }
}

/// A broken game invariant. Violations are data: [`validate`] collects all of them.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    NoInputs,
    NoActions,
    TooManyActions { count: usize },
    TooLarge { entries: u128 },
    TableSize { expected: usize, got: usize },
    MissingTransition { state: StateId, input: InputId, action: ActionId },
    SuccessorOutOfRange { state: StateId, input: InputId, action: ActionId, successor: StateId },
    UnsafeOutOfRange { id: StateId },
    LabelOutOfRange { kind: LabelKind, id: u32 },
    BadLabel { kind: LabelKind, id: u32 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NoInputs => write!(f, "num_inputs must be at least 1"),
            Violation::NoActions => write!(f, "num_actions must be at least 1"),
            Violation::TooManyActions { count } => {
                write!(f, "{count} actions exceed the supported maximum of {MAX_ACTIONS}")
            }
            Violation::TooLarge { entries } => {
                write!(f, "transition table of {entries} entries does not fit 32-bit ids")
            }
            Violation::TableSize { expected, got } => {
                write!(f, "transition table has {got} entries, expected {expected}")
            }
            Violation::MissingTransition { state, input, action } => {
                write!(f, "non-total transition: ({state}, {input}, {action}) undefined")
            }
            Violation::SuccessorOutOfRange { state, input, action, successor } => write!(
                f,
                "successor {successor} of ({state}, {input}, {action}) out of range"
            ),
            Violation::UnsafeOutOfRange { id } => write!(f, "unsafe state {id} out of range"),
            Violation::LabelOutOfRange { kind, id } => write!(f, "{kind} label id {id} out of range"),
            Violation::BadLabel { kind, id } => write!(
                f,
                "{kind} label {id} must be non-empty single-line text without `#`"
            ),
        }
    }
}

/// Unvalidated game data. `transitions[(s * num_inputs + i) * num_actions + a]`
/// holds the successor of `(s, i, a)`, `None` where undefined.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RawGame {
    pub num_states: usize,
    pub num_inputs: usize,
    pub num_actions: usize,
    pub transitions: Vec<Option<StateId>>,
    pub unsafe_states: Vec<StateId>,
    pub labels: Labels,
}

/// Checks every game invariant. Empty result iff the data forms a valid game.
/// Duplicate unsafe ids are not a violation (set semantics).
pub fn validate(raw: &RawGame) -> Vec<Violation> {
    let mut out = Vec::new();
    if raw.num_inputs == 0 {
        out.push(Violation::NoInputs);
    }
    if raw.num_actions == 0 {
        out.push(Violation::NoActions);
    }
    if raw.num_actions > MAX_ACTIONS {
        out.push(Violation::TooManyActions { count: raw.num_actions });
    }
    let entries = raw.num_states as u128 * raw.num_inputs as u128 * raw.num_actions as u128;
    if entries > u32::MAX as u128 || raw.num_states as u128 > u32::MAX as u128 {
        out.push(Violation::TooLarge { entries });
        return out;
    }
    let expected = entries as usize;
    if raw.transitions.len() != expected {
        out.push(Violation::TableSize { expected, got: raw.transitions.len() });
    } else {
        let (ni, na) = (raw.num_inputs, raw.num_actions);
        for (idx, succ) in raw.transitions.iter().enumerate() {
            let (s, i, a) = ((idx / (ni * na)) as u32, ((idx / na) % ni) as u32, (idx % na) as u32);
            match *succ {
                None => out.push(Violation::MissingTransition { state: s, input: i, action: a }),
                Some(t) if t as usize >= raw.num_states => out.push(Violation::SuccessorOutOfRange {
                    state: s,
                    input: i,
                    action: a,
                    successor: t,
                }),
                Some(_) => {}
            }
        }
    }
    let mut seen_bad = Vec::new();
    for &u in &raw.unsafe_states {
        if u as usize >= raw.num_states && !seen_bad.contains(&u) {
            seen_bad.push(u);
            out.push(Violation::UnsafeOutOfRange { id: u });
        }
    }
    for kind in [LabelKind::State, LabelKind::Input, LabelKind::Action] {
        let bound = match kind {
            LabelKind::State => raw.num_states,
            LabelKind::Input => raw.num_inputs,
            LabelKind::Action => raw.num_actions,
        };
        for (&id, name) in raw.labels.get(kind) {
            if id as usize >= bound {
                out.push(Violation::LabelOutOfRange { kind, id });
            }
            if !label_ok(name) {
                out.push(Violation::BadLabel { kind, id });
            }
        }
    }
    out
}

fn label_ok(name: &str) -> bool {
    !name.trim().is_empty() && name.trim() == name && !name.contains(['#', '\n', '\r'])
}

/// A validated, immutable safety game.
#[derive(Clone, PartialEq, Eq)]
pub struct GameGraph {
    num_states: usize,
    num_inputs: usize,
    num_actions: usize,
    transitions: Vec<StateId>,
    unsafe_states: Vec<StateId>,
    unsafe_mask: Vec<bool>,
    labels: Labels,
}

impl fmt::Debug for GameGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GameGraph")
            .field("num_states", &self.num_states)
            .field("num_inputs", &self.num_inputs)
            .field("num_actions", &self.num_actions)
            .field("unsafe", &self.unsafe_states.len())
            .finish_non_exhaustive()
    }
}

impl TryFrom<RawGame> for GameGraph {
    type Error = Error;

    fn try_from(raw: RawGame) -> Result<Self> {
        let violations = validate(&raw);
        if !violations.is_empty() {
            return Err(Error::Invalid(violations));
        }
        let mut unsafe_states = raw.unsafe_states;
        unsafe_states.sort_unstable();
        unsafe_states.dedup();
        let mut unsafe_mask = vec![false; raw.num_states];
        for &u in &unsafe_states {
            unsafe_mask[u as usize] = true;
        }
        Ok(GameGraph {
            num_states: raw.num_states,
            num_inputs: raw.num_inputs,
            num_actions: raw.num_actions,
            transitions: raw.transitions.into_iter().map(|t| t.unwrap()).collect(),
            unsafe_states,
            unsafe_mask,
            labels: raw.labels,
        })
    }
}

impl GameGraph {
    /// Builds a game from a complete transition table laid out as in [`RawGame`].
    pub fn new(
        num_states: usize,
        num_inputs: usize,
        num_actions: usize,
        transitions: Vec<StateId>,
        unsafe_states: impl IntoIterator<Item = StateId>,
    ) -> Result<Self> {
        Self::try_from(RawGame {
            num_states,
            num_inputs,
            num_actions,
            transitions: transitions.into_iter().map(Some).collect(),
            unsafe_states: unsafe_states.into_iter().collect(),
            labels: Labels::default(),
        })
    }

    /// Builds a game by evaluating `step` on every `(s, i, a)`.
    pub fn from_fn(
        num_states: usize,
        num_inputs: usize,
        num_actions: usize,
        mut step: impl FnMut(StateId, InputId, ActionId) -> StateId,
        unsafe_states: impl IntoIterator<Item = StateId>,
    ) -> Result<Self> {
        let mut table = Vec::with_capacity(num_states * num_inputs * num_actions);
        for s in 0..num_states as u32 {
            for i in 0..num_inputs as u32 {
                for a in 0..num_actions as u32 {
                    table.push(step(s, i, a));
                }
            }
        }
        Self::new(num_states, num_inputs, num_actions, table, unsafe_states)
    }

    pub fn with_labels(mut self, labels: Labels) -> Result<Self> {
        let raw = RawGame {
            num_states: self.num_states,
            num_inputs: self.num_inputs,
            num_actions: self.num_actions,
            transitions: Vec::new(),
            unsafe_states: Vec::new(),
            labels,
        };
        let violations: Vec<_> = validate(&raw)
            .into_iter()
            .filter(|v| matches!(v, Violation::LabelOutOfRange { .. } | Violation::BadLabel { .. }))
            .collect();
        if !violations.is_empty() {
            return Err(Error::Invalid(violations));
        }
        self.labels = raw.labels;
        Ok(self)
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

    pub fn num_transitions(&self) -> usize {
        self.transitions.len()
    }

    /// Successor of `(s, i, a)`. Ids must be in range.
    #[inline]
    pub fn successor(&self, s: StateId, i: InputId, a: ActionId) -> StateId {
        self.transitions[(s as usize * self.num_inputs + i as usize) * self.num_actions + a as usize]
    }

    /// The full transition table, indexed `(s * num_inputs + i) * num_actions + a`.
    pub fn transitions(&self) -> &[StateId] {
        &self.transitions
    }

    #[inline]
    pub fn is_unsafe(&self, s: StateId) -> bool {
        self.unsafe_mask[s as usize]
    }

    /// Sorted, deduplicated unsafe state ids.
    pub fn unsafe_states(&self) -> &[StateId] {
        &self.unsafe_states
    }

    pub fn labels(&self) -> &Labels {
        &self.labels
    }

    pub fn check_state(&self, s: StateId) -> Result<()> {
        check_id("state", s, self.num_states)
    }

    pub fn check_input(&self, i: InputId) -> Result<()> {
        check_id("input", i, self.num_inputs)
    }

    pub fn check_action(&self, a: ActionId) -> Result<()> {
        check_id("action", a, self.num_actions)
    }

    pub fn check_observation(&self, obs: Observation) -> Result<()> {
        self.check_state(obs.state)?;
        self.check_input(obs.input)
    }

    /// Splits a transition-table index into `(s, i, a)`.
    #[inline]
    pub fn edge_parts(&self, edge: u32) -> (StateId, InputId, ActionId) {
        let e = edge as usize;
        let a = e % self.num_actions;
        let si = e / self.num_actions;
        ((si / self.num_inputs) as u32, (si % self.num_inputs) as u32, a as u32)
    }

    /// Reverse adjacency: for every state, the table indices of transitions entering it.
    pub fn predecessors(&self) -> Predecessors {
        let mut offsets = vec![0usize; self.num_states + 1];
        for &t in &self.transitions {
            offsets[t as usize + 1] += 1;
        }
        for s in 0..self.num_states {
            offsets[s + 1] += offsets[s];
        }
        let mut fill = offsets.clone();
        let mut edges = vec![0u32; self.transitions.len()];
        for (e, &t) in self.transitions.iter().enumerate() {
            edges[fill[t as usize]] = e as u32;
            fill[t as usize] += 1;
        }
        Predecessors { offsets, edges }
    }

    /// Canonical text form: header, sorted unsafe list, transitions in `(s, i, a)`
    /// order, then labels sorted by kind and id.
    pub fn write_canonical<W: Write>(&self, out: &mut W) -> io::Result<()> {
        writeln!(out, "game {} {} {}", self.num_states, self.num_inputs, self.num_actions)?;
        out.write_all(b"unsafe")?;
        for u in &self.unsafe_states {
            write!(out, " {u}")?;
        }
        out.write_all(b"\n")?;
        for (e, t) in self.transitions.iter().enumerate() {
            let (s, i, a) = self.edge_parts(e as u32);
            writeln!(out, "t {s} {i} {a} {t}")?;
        }
        for kind in [LabelKind::State, LabelKind::Input, LabelKind::Action] {
            for (id, name) in self.labels.get(kind) {
                writeln!(out, "{} {id} {name}", kind.keyword())?;
            }
        }
        Ok(())
    }
}

pub(crate) fn check_id(what: &'static str, id: u32, bound: usize) -> Result<()> {
    if (id as usize) < bound {
        Ok(())
    } else {
        Err(Error::OutOfRange { what, id: id as u64, bound: bound as u64 })
    }
}

/// Reverse transition index in compressed-row form.
#[derive(Clone, Debug)]
pub struct Predecessors {
    offsets: Vec<usize>,
    edges: Vec<u32>,
}

impl Predecessors {
    /// Transition-table indices `e` with `transitions[e] == target`.
    #[inline]
    pub fn of(&self, target: StateId) -> &[u32] {
        &self.edges[self.offsets[target as usize]..self.offsets[target as usize + 1]]
    }
}

/// Canonical serialization of `g`.
pub fn serialize_game(g: &GameGraph) -> String {
    let mut buf = Vec::new();
    g.write_canonical(&mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("canonical form is ASCII plus UTF-8 labels")
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("line {line}, column {column}: {what} id {id} out of range (must be < {bound})")]
    OutOfRange { line: usize, column: usize, what: &'static str, id: u64, bound: u64 },
    #[error("line {line}: duplicate transition for ({state}, {input}, {action})")]
    DuplicateTransition { line: usize, state: StateId, input: InputId, action: ActionId },
    #[error("non-total transition: ({state}, {input}, {action}) undefined")]
    NonTotal { state: StateId, input: InputId, action: ActionId },
    #[error("invalid game: {0}")]
    Invalid(Violation),
}

struct Token<'a> {
    text: &'a str,
    column: usize,
}

fn tokens(line: &str) -> Vec<Token<'_>> {
    let mut out = Vec::new();
    let mut start = None;
    for (idx, ch) in line.char_indices() {
        match (ch.is_whitespace(), start) {
            (true, Some(s)) => {
                out.push(Token { text: &line[s..idx], column: line[..s].chars().count() + 1 });
                start = None;
            }
            (false, None) => start = Some(idx),
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push(Token { text: &line[s..], column: line[..s].chars().count() + 1 });
    }
    out
}

fn syntax(line: usize, column: usize, message: impl Into<String>) -> ParseError {
    ParseError::Syntax { line, column, message: message.into() }
}

fn number(line: usize, tok: &Token<'_>, what: &str) -> Result<u64, ParseError> {
    tok.text
        .parse::<u64>()
        .map_err(|_| syntax(line, tok.column, format!("expected {what}, found `{}`", tok.text)))
}

fn bounded(line: usize, tok: &Token<'_>, what: &'static str, bound: usize) -> Result<u32, ParseError> {
    let id = number(line, tok, what)?;
    if id >= bound as u64 {
        return Err(ParseError::OutOfRange { line, column: tok.column, what, id, bound: bound as u64 });
    }
    Ok(id as u32)
}

/// Parses a game document and validates it.
pub fn parse_game(text: &str) -> Result<GameGraph, ParseError> {
    let mut header: Option<(usize, usize, usize)> = None;
    let mut unsafe_states: Option<Vec<StateId>> = None;
    // (table index, successor, line)
    let mut entries: Vec<(u64, StateId, usize)> = Vec::new();
    let mut labels = Labels::default();
    let mut last_line = 0;

    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        last_line = line_no;
        let content = raw_line.split('#').next().unwrap_or("");
        let toks = tokens(content);
        let Some(first) = toks.first() else { continue };

        let Some((ns, ni, na)) = header else {
            if first.text != "game" {
                return Err(syntax(line_no, first.column, "expected `game` header"));
            }
            if toks.len() != 4 {
                return Err(syntax(line_no, first.column, "header must be `game <states> <inputs> <actions>`"));
            }
            let ns = number(line_no, &toks[1], "state count")?;
            let ni = number(line_no, &toks[2], "input count")?;
            let na = number(line_no, &toks[3], "action count")?;
            let probe = RawGame {
                num_states: ns as usize,
                num_inputs: ni as usize,
                num_actions: na as usize,
                ..RawGame::default()
            };
            if let Some(v) = validate(&probe)
                .into_iter()
                .find(|v| !matches!(v, Violation::TableSize { .. }))
            {
                return Err(ParseError::Invalid(v));
            }
            header = Some((ns as usize, ni as usize, na as usize));
            continue;
        };

        if unsafe_states.is_none() {
            if first.text != "unsafe" {
                return Err(syntax(line_no, first.column, "expected `unsafe` line"));
            }
            let ids = toks[1..]
                .iter()
                .map(|t| bounded(line_no, t, "unsafe state", ns))
                .collect::<Result<Vec<_>, _>>()?;
            unsafe_states = Some(ids);
            continue;
        }

        match first.text {
            "t" => {
                if toks.len() != 5 {
                    return Err(syntax(line_no, first.column, "transition must be `t <s> <i> <a> <s'>`"));
                }
                let s = bounded(line_no, &toks[1], "state", ns)?;
                let i = bounded(line_no, &toks[2], "input", ni)?;
                let a = bounded(line_no, &toks[3], "action", na)?;
                let t = bounded(line_no, &toks[4], "successor state", ns)?;
                let key = (s as u64 * ni as u64 + i as u64) * na as u64 + a as u64;
                entries.push((key, t, line_no));
            }
            kw @ ("sl" | "il" | "al") => {
                let (kind, bound) = match kw {
                    "sl" => (LabelKind::State, ns),
                    "il" => (LabelKind::Input, ni),
                    _ => (LabelKind::Action, na),
                };
                if toks.len() < 3 {
                    return Err(syntax(line_no, first.column, format!("label must be `{kw} <id> <name>`")));
                }
                let id = bounded(line_no, &toks[1], "label", bound)?;
                let name_start = content
                    .char_indices()
                    .nth(toks[2].column - 1)
                    .map(|(b, _)| b)
                    .unwrap_or(content.len());
                let name = content[name_start..].trim().to_string();
                if labels.get_mut(kind).insert(id, name).is_some() {
                    return Err(syntax(line_no, first.column, format!("duplicate {kind} label for id {id}")));
                }
            }
            other => {
                return Err(syntax(line_no, first.column, format!("unknown directive `{other}`")));
            }
        }
    }

    let Some((ns, ni, na)) = header else {
        return Err(syntax(last_line.max(1), 1, "missing `game` header"));
    };
    let Some(unsafe_states) = unsafe_states else {
        return Err(syntax(last_line.max(1), 1, "missing `unsafe` line"));
    };

    entries.sort_by_key(|&(key, _, line)| (key, line));
    for pair in entries.windows(2) {
        if pair[0].0 == pair[1].0 {
            let (s, i, a) = split_key(pair[1].0, ni, na);
            return Err(ParseError::DuplicateTransition { line: pair[1].2, state: s, input: i, action: a });
        }
    }
    let table_len = ns * ni * na;
    if entries.len() != table_len {
        let missing = entries
            .iter()
            .enumerate()
            .find(|(pos, e)| e.0 != *pos as u64)
            .map(|(pos, _)| pos as u64)
            .unwrap_or(entries.len() as u64);
        let (s, i, a) = split_key(missing, ni, na);
        return Err(ParseError::NonTotal { state: s, input: i, action: a });
    }

    let raw = RawGame {
        num_states: ns,
        num_inputs: ni,
        num_actions: na,
        transitions: entries.into_iter().map(|(_, t, _)| Some(t)).collect(),
        unsafe_states,
        labels,
    };
    GameGraph::try_from(raw).map_err(|e| match e {
        Error::Invalid(mut v) => ParseError::Invalid(v.remove(0)),
        other => unreachable!("validation only reports violations: {other}"),
    })
}

fn split_key(key: u64, ni: usize, na: usize) -> (StateId, InputId, ActionId) {
    let a = key % na as u64;
    let si = key / na as u64;
    ((si / ni as u64) as u32, (si % ni as u64) as u32, a as u32)
}
