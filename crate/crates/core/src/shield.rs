//! Online delay-resilient shield and the heuristics used to pick corrective actions.

use std::cmp::Ordering;
use std::collections::VecDeque;

use crate::bits::ActionSet;
use crate::delayed::{solve_delayed, DelayedStrategy};
use crate::error::{Error, Result};
use crate::game::{ActionId, GameGraph, InputId, Observation, StateId};

/// Distance sentinel for states that cannot reach the unsafe set.
const UNREACHABLE: u32 = u32::MAX;

/// Shortest number of transitions (any input, any action) from each state to the
/// unsafe set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RobustnessMap {
    dist: Vec<u32>,
}

impl RobustnessMap {
    /// `None` encodes an infinite distance.
    pub fn value(&self, s: StateId) -> Option<u32> {
        match self.dist[s as usize] {
            UNREACHABLE => None,
            d => Some(d),
        }
    }

    pub fn len(&self) -> usize {
        self.dist.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dist.is_empty()
    }

    /// Raw distances with `u32::MAX` for infinity.
    pub fn raw(&self) -> &[u32] {
        &self.dist
    }

    pub fn from_raw(dist: Vec<u32>) -> Self {
        RobustnessMap { dist }
    }
}

/// Multi-source BFS from the unsafe states over reversed one-step edges.
pub fn robustness_values(game: &GameGraph) -> RobustnessMap {
    let mut dist = vec![UNREACHABLE; game.num_states()];
    let mut frontier: Vec<StateId> = game.unsafe_states().to_vec();
    for &u in &frontier {
        dist[u as usize] = 0;
    }
    let preds = game.predecessors();
    let mut depth = 0;
    while !frontier.is_empty() {
        depth += 1;
        let mut next = Vec::new();
        for &t in &frontier {
            for &e in preds.of(t) {
                let (p, _, _) = game.edge_parts(e);
                if dist[p as usize] == UNREACHABLE {
                    dist[p as usize] = depth;
                    next.push(p);
                }
            }
        }
        frontier = next;
    }
    RobustnessMap { dist }
}

/// Largest delay `k ≤ δ_max` under which each state is controllable, `-1` if none.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ControllabilityMap {
    delta_max: usize,
    values: Vec<i8>,
}

impl ControllabilityMap {
    pub fn value(&self, s: StateId) -> i32 {
        self.values[s as usize] as i32
    }

    pub fn delta_max(&self) -> usize {
        self.delta_max
    }

    pub fn raw(&self) -> &[i8] {
        &self.values
    }

    pub fn from_raw(delta_max: usize, values: Vec<i8>) -> Self {
        ControllabilityMap { delta_max, values }
    }

    /// Reads the values off an already solved strategy (its delay is δ_max).
    pub fn from_strategy(strategy: &DelayedStrategy) -> Self {
        let mut values = vec![-1i8; strategy.num_states()];
        // C_{k+1} ⊆ C_k, so the last level containing s is the maximum.
        for (k, level) in strategy.levels().iter().enumerate() {
            for &s in level.states() {
                values[s as usize] = k as i8;
            }
        }
        ControllabilityMap { delta_max: strategy.delay(), values }
    }
}

pub fn controllability_values(game: &GameGraph, delta_max: usize) -> ControllabilityMap {
    ControllabilityMap::from_strategy(&solve_delayed(game, delta_max))
}

/// State property maximized when choosing a corrective action.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Heuristic {
    Robustness(RobustnessMap),
    Controllability(ControllabilityMap),
}

impl Heuristic {
    /// Value used in forward-set averages; infinite robustness counts as `num_states`.
    pub fn score(&self, s: StateId) -> i64 {
        match self {
            Heuristic::Robustness(m) => m.value(s).map_or(m.len() as i64, i64::from),
            Heuristic::Controllability(m) => m.value(s) as i64,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Heuristic::Robustness(_) => "robust",
            Heuristic::Controllability(_) => "control",
        }
    }
}

/// States reachable from `s` by playing `actions` in order against every input
/// sequence. Sorted, without duplicates.
pub fn forward_set(game: &GameGraph, s: StateId, actions: &[ActionId]) -> Vec<StateId> {
    let mut current = vec![s];
    for &a in actions {
        current = step_all(game, &current, a);
    }
    current
}

fn step_all(game: &GameGraph, from: &[StateId], a: ActionId) -> Vec<StateId> {
    let mut next: Vec<StateId> = from
        .iter()
        .flat_map(|&x| (0..game.num_inputs() as InputId).map(move |i| game.successor(x, i, a)))
        .collect();
    next.sort_unstable();
    next.dedup();
    next
}

/// Sum and size of a forward set's heuristic values; compared as exact means.
#[derive(Clone, Copy, Debug)]
struct Mean {
    sum: i64,
    count: i64,
}

impl Mean {
    fn of(heuristic: &Heuristic, states: &[StateId]) -> Self {
        Mean { sum: states.iter().map(|&x| heuristic.score(x)).sum(), count: states.len() as i64 }
    }

    fn cmp(self, other: Mean) -> Ordering {
        (self.sum as i128 * other.count as i128).cmp(&(other.sum as i128 * self.count as i128))
    }
}

/// Outcome of consulting the shield for one step.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Pick {
    pub action: ActionId,
    pub intervened: bool,
}

/// Best action in `allowed` by mean heuristic over `successors(a)`; the smallest
/// id wins ties.
fn best_by_mean(
    allowed: ActionSet,
    heuristic: &Heuristic,
    mut successors: impl FnMut(ActionId) -> Vec<StateId>,
) -> Option<ActionId> {
    let mut best: Option<(ActionId, Mean)> = None;
    for a in allowed.iter() {
        let mean = Mean::of(heuristic, &successors(a));
        if best.is_none_or(|(_, m)| mean.cmp(m) == Ordering::Greater) {
            best = Some((a, mean));
        }
    }
    best.map(|(a, _)| a)
}

/// Passes `proposed` through if allowed; otherwise returns the allowed action
/// whose forward set has the highest mean heuristic value.
///
/// The forward set starts at `succ(s, i, buffer₁)` and plays `buffer₂..buffer_δ·a`
/// under all inputs. With δ = 0 it is `{ succ(s, i, a) }`.
pub fn pick_action(
    game: &GameGraph,
    strategy: &DelayedStrategy,
    heuristic: &Heuristic,
    s: StateId,
    i: InputId,
    buffer: &[ActionId],
    proposed: ActionId,
) -> Result<Pick> {
    game.check_action(proposed)?;
    let allowed = strategy.allowed_delayed(game, s, i, buffer)?;
    if allowed.contains(proposed) {
        return Ok(Pick { action: proposed, intervened: false });
    }
    let action = match buffer.split_first() {
        None => best_by_mean(allowed, heuristic, |a| vec![game.successor(s, i, a)]),
        Some((&first, rest)) => {
            let base = forward_set(game, game.successor(s, i, first), rest);
            best_by_mean(allowed, heuristic, |a| step_all(game, &base, a))
        }
    };
    action.map(|action| Pick { action, intervened: true }).ok_or(Error::NoSafeAction)
}

/// Warm-up counterpart of [`pick_action`]: only `s0` is known and `partial`
/// (shorter than δ) has been issued, so the forward set is that of
/// `partial·a` from `s0`.
pub fn pick_warmup(
    game: &GameGraph,
    strategy: &DelayedStrategy,
    heuristic: &Heuristic,
    s0: StateId,
    partial: &[ActionId],
    proposed: ActionId,
) -> Result<Pick> {
    game.check_action(proposed)?;
    let allowed = strategy.allowed_warmup(s0, partial)?;
    if allowed.contains(proposed) {
        return Ok(Pick { action: proposed, intervened: false });
    }
    let base = forward_set(game, s0, partial);
    best_by_mean(allowed, heuristic, |a| step_all(game, &base, a))
        .map(|action| Pick { action, intervened: true })
        .ok_or(Error::NoSafeAction)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ShieldStats {
    pub steps: u64,
    pub interventions: u64,
    pub fallbacks: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StepOutcome {
    pub emitted: ActionId,
    pub intervened: bool,
    /// No action was safe and the fallback action was emitted.
    pub fallback: bool,
}

/// Runtime memory of one shield instance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShieldState {
    pub initial: StateId,
    pub last_obs: Option<Observation>,
    /// Emitted actions not yet covered by an observation, oldest first.
    pub buffer: VecDeque<ActionId>,
    pub step: u64,
    pub fallback_action: ActionId,
    pub stats: ShieldStats,
}

/// A delay-resilient shield bound to a game, its solved strategy and a heuristic.
///
/// At step `t` the caller supplies the observation `(s_{t-δ}, i_{t-δ})`, or
/// `None` during the first δ steps, together with the agent's proposal.
#[derive(Clone, Debug)]
pub struct Shield<'a> {
    game: &'a GameGraph,
    strategy: &'a DelayedStrategy,
    heuristic: &'a Heuristic,
    state: ShieldState,
}

impl<'a> Shield<'a> {
    pub fn new(
        game: &'a GameGraph,
        strategy: &'a DelayedStrategy,
        heuristic: &'a Heuristic,
        initial: StateId,
        fallback_action: ActionId,
    ) -> Result<Self> {
        game.check_state(initial)?;
        game.check_action(fallback_action)?;
        Ok(Shield {
            game,
            strategy,
            heuristic,
            state: ShieldState {
                initial,
                last_obs: None,
                buffer: VecDeque::with_capacity(strategy.delay()),
                step: 0,
                fallback_action,
                stats: ShieldStats::default(),
            },
        })
    }

    pub fn state(&self) -> &ShieldState {
        &self.state
    }

    pub fn delay(&self) -> usize {
        self.strategy.delay()
    }

    pub fn in_warmup(&self) -> bool {
        (self.state.step as usize) < self.strategy.delay()
    }

    /// Pending actions, oldest first.
    pub fn buffer(&self) -> Vec<ActionId> {
        self.state.buffer.iter().copied().collect()
    }

    /// The corrective action this shield's strategy would choose under another
    /// heuristic for the same step, without advancing the shield.
    pub fn correction_under(&self, heuristic: &Heuristic, obs: Option<Observation>, proposed: ActionId) -> Result<Option<ActionId>> {
        let buffer = self.buffer();
        let pick = match obs {
            None if self.in_warmup() => pick_warmup(self.game, self.strategy, heuristic, self.state.initial, &buffer, proposed),
            Some(o) if !self.in_warmup() => pick_action(self.game, self.strategy, heuristic, o.state, o.input, &buffer, proposed),
            _ => return Err(self.protocol_error(obs)),
        };
        match pick {
            Ok(p) => Ok(p.intervened.then_some(p.action)),
            Err(Error::NoSafeAction) => Ok(None),
            Err(e) => Err(e),
        }
    }

    fn protocol_error(&self, obs: Option<Observation>) -> Error {
        Error::Protocol {
            step: self.state.step,
            reason: if obs.is_some() {
                "observation supplied during warm-up"
            } else {
                "missing observation after warm-up"
            },
        }
    }

    pub fn step(&mut self, obs: Option<Observation>, proposed: ActionId) -> Result<StepOutcome> {
        self.game.check_action(proposed)?;
        let buffer = self.buffer();
        let pick = match obs {
            None if self.in_warmup() => pick_warmup(self.game, self.strategy, self.heuristic, self.state.initial, &buffer, proposed),
            Some(o) if !self.in_warmup() => {
                self.game.check_observation(o)?;
                pick_action(self.game, self.strategy, self.heuristic, o.state, o.input, &buffer, proposed)
            }
            _ => return Err(self.protocol_error(obs)),
        };
        let outcome = match pick {
            Ok(p) => StepOutcome { emitted: p.action, intervened: p.intervened, fallback: false },
            Err(Error::NoSafeAction) => StepOutcome {
                emitted: self.state.fallback_action,
                intervened: self.state.fallback_action != proposed,
                fallback: true,
            },
            Err(e) => return Err(e),
        };
        if obs.is_some() {
            self.state.last_obs = obs;
            self.state.buffer.pop_front();
        }
        if self.strategy.delay() > 0 {
            self.state.buffer.push_back(outcome.emitted);
        }
        self.state.step += 1;
        let stats = &mut self.state.stats;
        stats.steps += 1;
        stats.interventions += outcome.intervened as u64;
        stats.fallbacks += outcome.fallback as u64;
        Ok(outcome)
    }
}
