mod common;

use std::collections::BTreeSet;

use common::{all_buffers, dodge_game, product_win, random_game, rng, Config};
use delayshield::{solve_delayed, solve_safety, ActionId, GameGraph, InputId, StateId};
use proptest::prelude::*;
use rand::Rng;

fn incremental_win(d: &delayshield::DelayedStrategy, k: usize) -> BTreeSet<Config> {
    d.configs(k).unwrap().into_iter().collect()
}

#[test]
fn zero_delay_is_the_delay_free_region() {
    let mut r = rng(1);
    for _ in 0..10 {
        let g = random_game(&mut r, 80, 2, 3);
        let d = solve_delayed(&g, 0);
        assert_eq!(d.controllable_states(0).unwrap(), solve_safety(&g).winning_states().as_slice());
    }
}

#[test]
fn dodge_game_matches_product_oracle() {
    let g = dodge_game();
    let d = solve_delayed(&g, 3);
    for k in 0..=3 {
        assert_eq!(incremental_win(&d, k), product_win(&g, k), "level {k}");
    }
    // Winning without delay, lost once the move must be committed in advance.
    assert!(d.controllable_under(0, 0).unwrap());
    assert!(!d.controllable_under(0, 1).unwrap());
    assert!(!product_win(&g, 1).iter().any(|(s, _)| *s == 0));
}

#[test]
fn incremental_equals_direct_product_on_random_games() {
    let mut r = rng(0xde1a);
    for _ in 0..30 {
        let g = random_game(&mut r, 60, 2, 2);
        let delta = r.gen_range(0..=3);
        let d = solve_delayed(&g, delta);
        for k in 0..=delta {
            assert_eq!(incremental_win(&d, k), product_win(&g, k), "level {k} of {} states", g.num_states());
        }
    }
}

#[test]
fn three_action_games_match_product_oracle() {
    let mut r = rng(31);
    for _ in 0..8 {
        let g = random_game(&mut r, 25, 2, 3);
        let d = solve_delayed(&g, 2);
        for k in 0..=2 {
            assert_eq!(incremental_win(&d, k), product_win(&g, k));
        }
    }
}

#[test]
fn controllable_sets_shrink_with_delay() {
    let mut r = rng(4);
    for _ in 0..20 {
        let g = random_game(&mut r, 100, 3, 3);
        let d = solve_delayed(&g, 3);
        for k in 0..3 {
            let lower: BTreeSet<_> = d.controllable_states(k).unwrap().iter().copied().collect();
            assert!(d.controllable_states(k + 1).unwrap().iter().all(|s| lower.contains(s)));
        }
    }
}

/// A 5-state game where the buffered action decides everything: from 0,
/// action 1 enters the trap 3 (whose every move leads to the crash 4) while
/// action 0 reaches the safe sink 1.
fn trap_game() -> GameGraph {
    GameGraph::from_fn(
        5,
        2,
        2,
        |s, _, a| match s {
            0 => if a == 0 { 1 } else { 3 },
            2 => 0,
            3 => 4,
            s => s,
        },
        [4],
    )
    .unwrap()
}

#[test]
fn committed_action_into_trap_leaves_nothing_allowed() {
    let g = trap_game();
    let d = solve_delayed(&g, 1);
    let oracle = product_win(&g, 1);
    // Observed (2, i) with anything pending moves to 0, where the newly
    // committed action must avoid the trap.
    assert_eq!(d.allowed_delayed(&g, 2, 0, &[0]).unwrap().iter().collect::<Vec<_>>(), vec![0]);
    // Observed (0, i) with pending action 1 lands in the trap: nothing helps.
    assert!(d.allowed_delayed(&g, 0, 0, &[1]).unwrap().is_empty());
    assert!(!oracle.iter().any(|(s, _)| *s == 3));
    for a in 0..2 {
        assert_eq!(d.allowed_delayed(&g, 0, 1, &[0]).unwrap().contains(a), oracle.contains(&(1, vec![a])));
    }
}

#[test]
fn allowed_actions_keep_configuration_winning() {
    let mut r = rng(55);
    for _ in 0..15 {
        let g = random_game(&mut r, 40, 2, 3);
        let delta = r.gen_range(1..=3);
        let d = solve_delayed(&g, delta);
        for s in 0..g.num_states() as StateId {
            for i in 0..g.num_inputs() as InputId {
                for buf in all_buffers(3, delta) {
                    let allowed = d.allowed_delayed(&g, s, i, &buf).unwrap();
                    for a in 0..3 {
                        let mut next = buf[1..].to_vec();
                        next.push(a);
                        let member = d.contains(g.successor(s, i, buf[0]), &next).unwrap();
                        assert_eq!(allowed.contains(a), member);
                    }
                }
            }
        }
    }
}

#[test]
fn single_action_game_is_delay_insensitive() {
    // With one action there is nothing to pre-commit: Win_k = W × {a^k}.
    let mut r = rng(8);
    for _ in 0..10 {
        let g = random_game(&mut r, 60, 3, 1);
        let w = solve_safety(&g).winning_states();
        let d = solve_delayed(&g, 3);
        for k in 0..=3 {
            let expected: BTreeSet<Config> = w.iter().map(|&s| (s, vec![0; k])).collect();
            assert_eq!(incremental_win(&d, k), expected);
        }
    }
}

#[test]
fn constant_action_region_is_inside_constant_buffers() {
    // Playing a* forever ignores observations, so every state winning in the
    // game forced to a* keeps (s, a*^k) winning at every delay.
    let mut r = rng(12);
    for _ in 0..10 {
        let g = random_game(&mut r, 60, 2, 3);
        let d = solve_delayed(&g, 3);
        for star in 0..3 as ActionId {
            let forced = GameGraph::from_fn(
                g.num_states(),
                g.num_inputs(),
                1,
                |s, i, _| g.successor(s, i, star),
                g.unsafe_states().iter().copied(),
            )
            .unwrap();
            for s in solve_safety(&forced).winning_states() {
                for k in 0..=3 {
                    assert!(d.contains(s, &vec![star; k]).unwrap());
                }
            }
        }
    }
}

fn warmup_chain(d: &delayshield::DelayedStrategy, s0: StateId, picks: &[usize]) -> Vec<ActionId> {
    let mut partial = Vec::new();
    for t in 0..d.delay() {
        let allowed = d.allowed_warmup(s0, &partial).unwrap();
        assert!(!allowed.is_empty(), "warm-up dead end at step {t}");
        let choice: Vec<_> = allowed.iter().collect();
        partial.push(choice[picks[t] % choice.len()]);
        assert!(d.contains(s0, &partial).unwrap(), "left Win_{}", t + 1);
    }
    partial
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn warmup_chains_stay_winning(seed in any::<u64>(), picks in proptest::collection::vec(0usize..8, 3)) {
        let mut r = rng(seed);
        let g = random_game(&mut r, 40, 2, 3);
        let delta = r.gen_range(1..=3);
        let d = solve_delayed(&g, delta);
        for &s0 in d.controllable_states(delta).unwrap() {
            let buf = warmup_chain(&d, s0, &picks);
            prop_assert_eq!(buf.len(), delta);
        }
    }
}
