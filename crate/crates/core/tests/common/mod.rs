//! Independent reference implementations used as test oracles. None of these
//! share code paths with the solvers they check.

#![allow(dead_code, clippy::needless_range_loop)]

use std::collections::{BTreeMap, BTreeSet};

use delayshield::{ActionId, GameGraph, InputId, StateId};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random total game. Most successors are near the source so winning regions
/// are neither empty nor everything.
pub fn random_game(rng: &mut impl Rng, max_states: usize, inputs: usize, actions: usize) -> GameGraph {
    let n = rng.gen_range(2..=max_states);
    let unsafe_frac = rng.gen_range(0.03..0.2);
    let unsafe_states: Vec<StateId> = (0..n as StateId).filter(|_| rng.gen_bool(unsafe_frac)).collect();
    let mut table = Vec::with_capacity(n * inputs * actions);
    for s in 0..n {
        for _ in 0..inputs {
            for _ in 0..actions {
                let t = if rng.gen_bool(0.75) {
                    let off = rng.gen_range(-4i64..=4);
                    (s as i64 + off).rem_euclid(n as i64) as usize
                } else {
                    rng.gen_range(0..n)
                };
                table.push(t as StateId);
            }
        }
    }
    GameGraph::new(n, inputs, actions, table, unsafe_states).unwrap()
}

/// Iterates `W_{j+1} = { s ∈ W_j | ∀i ∃a: succ ∈ W_j }` over whole sets until stable.
pub fn naive_winning(g: &GameGraph) -> BTreeSet<StateId> {
    let mut w: BTreeSet<StateId> = (0..g.num_states() as StateId).filter(|&s| !g.is_unsafe(s)).collect();
    loop {
        let next: BTreeSet<StateId> = w
            .iter()
            .copied()
            .filter(|&s| {
                (0..g.num_inputs() as InputId)
                    .all(|i| (0..g.num_actions() as ActionId).any(|a| w.contains(&g.successor(s, i, a))))
            })
            .collect();
        if next == w {
            return w;
        }
        w = next;
    }
}

pub fn naive_allowed(g: &GameGraph, w: &BTreeSet<StateId>, s: StateId, i: InputId) -> BTreeSet<ActionId> {
    if !w.contains(&s) {
        return BTreeSet::new();
    }
    (0..g.num_actions() as ActionId).filter(|&a| w.contains(&g.successor(s, i, a))).collect()
}

pub type Config = (StateId, Vec<ActionId>);

/// All buffers of length `k` over `actions` letters, lexicographic.
pub fn all_buffers(actions: usize, k: usize) -> Vec<Vec<ActionId>> {
    let mut out = vec![vec![]];
    for _ in 0..k {
        out = out
            .into_iter()
            .flat_map(|b| {
                (0..actions as ActionId).map(move |a| {
                    let mut nb = b.clone();
                    nb.push(a);
                    nb
                })
            })
            .collect();
    }
    out
}

/// `Win_k` by building the full product game over `S × A^k` and solving it
/// with the naive fixpoint.
pub fn product_win(g: &GameGraph, k: usize) -> BTreeSet<Config> {
    let buffers = all_buffers(g.num_actions(), k);
    let mut ids: BTreeMap<Config, usize> = BTreeMap::new();
    let mut configs = Vec::new();
    for s in 0..g.num_states() as StateId {
        for b in &buffers {
            ids.insert((s, b.clone()), configs.len());
            configs.push((s, b.clone()));
        }
    }
    let succ = |(s, b): &Config, i: InputId, a: ActionId| -> Config {
        if k == 0 {
            (g.successor(*s, i, a), vec![])
        } else {
            let mut nb = b[1..].to_vec();
            nb.push(a);
            (g.successor(*s, i, b[0]), nb)
        }
    };
    let mut table = Vec::new();
    for c in &configs {
        for i in 0..g.num_inputs() as InputId {
            for a in 0..g.num_actions() as ActionId {
                table.push(ids[&succ(c, i, a)] as StateId);
            }
        }
    }
    let unsafe_ids = configs
        .iter()
        .enumerate()
        .filter(|(_, (s, _))| g.is_unsafe(*s))
        .map(|(id, _)| id as StateId);
    let product = GameGraph::new(configs.len(), g.num_inputs(), g.num_actions(), table, unsafe_ids).unwrap();
    naive_winning(&product).into_iter().map(|id| configs[id as usize].clone()).collect()
}

/// Distance from each state to the unsafe set via an all-pairs shortest path
/// over the one-step successor relation. `None` is infinity.
pub fn all_pairs_robustness(g: &GameGraph) -> Vec<Option<u32>> {
    let n = g.num_states();
    const INF: u32 = u32::MAX / 4;
    let mut d = vec![vec![INF; n]; n];
    for s in 0..n {
        d[s][s] = 0;
        for i in 0..g.num_inputs() as InputId {
            for a in 0..g.num_actions() as ActionId {
                let t = g.successor(s as StateId, i, a) as usize;
                if t != s {
                    d[s][t] = 1;
                }
            }
        }
    }
    for m in 0..n {
        for x in 0..n {
            if d[x][m] == INF {
                continue;
            }
            for y in 0..n {
                let via = d[x][m] + d[m][y];
                if via < d[x][y] {
                    d[x][y] = via;
                }
            }
        }
    }
    (0..n)
        .map(|s| {
            let best = g.unsafe_states().iter().map(|&u| d[s][u as usize]).min().unwrap_or(INF);
            (best < INF).then_some(best)
        })
        .collect()
}

/// Forward set by enumerating every input sequence of length `actions.len()`.
pub fn enumerate_forward(g: &GameGraph, s: StateId, actions: &[ActionId]) -> BTreeSet<StateId> {
    let mut out = BTreeSet::new();
    let k = actions.len();
    let total = g.num_inputs().pow(k as u32);
    for seq in 0..total {
        let mut code = seq;
        let mut x = s;
        for &a in actions {
            let i = (code % g.num_inputs()) as InputId;
            code /= g.num_inputs();
            x = g.successor(x, i, a);
        }
        out.insert(x);
    }
    out
}

/// The 4-state dodge game: in state 0 the agent must move away from the side
/// the environment picks (`i == a` crashes into 3); 1 and 2 are safe sinks.
pub fn dodge_game() -> GameGraph {
    GameGraph::from_fn(
        4,
        2,
        2,
        |s, i, a| match s {
            0 if i == a => 3,
            0 => 1 + a,
            s => s,
        },
        [3],
    )
    .unwrap()
}
