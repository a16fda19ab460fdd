//! Delay-free safety games: winning region and maximally-permissive strategy.

use crate::bits::ActionSet;
use crate::error::Result;
use crate::game::{check_id, ActionId, GameGraph, InputId, StateId};

/// Winning region `W` and, for every `s ∈ W` and input `i`, the set of actions
/// whose successor stays in `W`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PermissiveStrategy {
    num_states: usize,
    num_inputs: usize,
    winning: Vec<bool>,
    allowed: Vec<ActionSet>,
}

impl PermissiveStrategy {
    pub fn is_winning(&self, s: StateId) -> Result<bool> {
        check_id("state", s, self.num_states)?;
        Ok(self.winning[s as usize])
    }

    /// Safe actions at `(s, i)`; empty when `s` is not winning.
    pub fn allowed_actions(&self, s: StateId, i: InputId) -> Result<ActionSet> {
        check_id("state", s, self.num_states)?;
        check_id("input", i, self.num_inputs)?;
        Ok(self.allowed[s as usize * self.num_inputs + i as usize])
    }

    pub fn winning_mask(&self) -> &[bool] {
        &self.winning
    }

    /// Winning states in ascending order.
    pub fn winning_states(&self) -> Vec<StateId> {
        (0..self.num_states as StateId).filter(|&s| self.winning[s as usize]).collect()
    }

    pub fn winning_count(&self) -> usize {
        self.winning.iter().filter(|&&w| w).count()
    }
}

/// Greatest fixpoint of `W = { s ∉ unsafe | ∀i ∃a: succ(s,i,a) ∈ W }`.
///
/// Backward propagation with a counter of surviving actions per `(state, input)`;
/// every transition is visited a constant number of times.
pub fn winning_region(game: &GameGraph) -> Vec<bool> {
    let (ns, ni, na) = (game.num_states(), game.num_inputs(), game.num_actions());
    let mut alive: Vec<bool> = (0..ns as StateId).map(|s| !game.is_unsafe(s)).collect();
    // counts[s * ni + i] = actions at (s, i) leading outside the unsafe set
    let mut counts = vec![0u8; ns * ni];
    for (si, c) in counts.iter_mut().enumerate() {
        if alive[si / ni] {
            let base = si * na;
            *c = game.transitions()[base..base + na]
                .iter()
                .filter(|&&t| !game.is_unsafe(t))
                .count() as u8;
        }
    }
    // Unsafe states never contributed to a counter, so only states removed for
    // an exhausted counter are propagated.
    let mut queue: Vec<StateId> = Vec::new();
    for s in 0..ns {
        if alive[s] && counts[s * ni..(s + 1) * ni].contains(&0) {
            alive[s] = false;
            queue.push(s as StateId);
        }
    }
    let preds = game.predecessors();
    while let Some(dead) = queue.pop() {
        for &e in preds.of(dead) {
            let (p, i, _) = game.edge_parts(e);
            if !alive[p as usize] {
                continue;
            }
            let c = &mut counts[p as usize * ni + i as usize];
            *c -= 1;
            if *c == 0 {
                alive[p as usize] = false;
                queue.push(p);
            }
        }
    }
    alive
}

pub fn solve_safety(game: &GameGraph) -> PermissiveStrategy {
    let winning = winning_region(game);
    let (ns, ni, na) = (game.num_states(), game.num_inputs(), game.num_actions());
    let mut allowed = vec![ActionSet::EMPTY; ns * ni];
    for s in 0..ns {
        if !winning[s] {
            continue;
        }
        for i in 0..ni {
            let base = (s * ni + i) * na;
            allowed[s * ni + i] = game.transitions()[base..base + na]
                .iter()
                .enumerate()
                .filter(|(_, &t)| winning[t as usize])
                .map(|(a, _)| a as ActionId)
                .collect();
        }
    }
    PermissiveStrategy { num_states: ns, num_inputs: ni, winning, allowed }
}
