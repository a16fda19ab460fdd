mod common;

use std::collections::BTreeSet;

use common::{all_pairs_robustness, dodge_game, enumerate_forward, product_win, random_game, rng};
use delayshield::shield::pick_warmup;
use delayshield::{
    controllability_values, forward_set, pick_action, robustness_values, solve_delayed, solve_safety, ActionId,
    DelayedStrategy, GameGraph, Heuristic, InputId, Observation, Pick, Shield, StateId,
};
use proptest::prelude::*;
use rand::Rng;

#[test]
fn robustness_matches_all_pairs_oracle() {
    let mut r = rng(0x60b);
    for _ in 0..40 {
        let g = random_game(&mut r, 200, 3, 3);
        let m = robustness_values(&g);
        let oracle = all_pairs_robustness(&g);
        for s in 0..g.num_states() as StateId {
            assert_eq!(m.value(s), oracle[s as usize], "state {s}");
            assert_eq!(m.value(s) == Some(0), g.is_unsafe(s));
        }
    }
}

#[test]
fn forward_set_matches_input_enumeration() {
    let mut r = rng(0xf0);
    for _ in 0..40 {
        let g = random_game(&mut r, 60, 3, 3);
        for _ in 0..10 {
            let s = r.gen_range(0..g.num_states() as StateId);
            let k = r.gen_range(0..=3);
            let actions: Vec<ActionId> = (0..k).map(|_| r.gen_range(0..3)).collect();
            let got: BTreeSet<StateId> = forward_set(&g, s, &actions).into_iter().collect();
            assert_eq!(got, enumerate_forward(&g, s, &actions));
        }
    }
}

#[test]
fn forward_set_single_input_is_deterministic() {
    let g = GameGraph::from_fn(4, 1, 2, |s, _, a| (s + a + 1) % 4, []).unwrap();
    assert_eq!(forward_set(&g, 2, &[1]), vec![0]);
}

#[test]
fn dodge_controllability_values() {
    let g = dodge_game();
    let m = controllability_values(&g, 3);
    assert_eq!((0..4).map(|s| m.value(s)).collect::<Vec<_>>(), vec![0, 3, 3, -1]);
    let product_c1: BTreeSet<StateId> = product_win(&g, 1).into_iter().map(|(s, _)| s).collect();
    assert!(!product_c1.contains(&0));
}

/// Unsafe 0, a chain 1..=5 whose action 0 steps toward 0 (so state d has
/// robustness d), a root 6 that always moves to 7, and 7 whose actions lead to
/// {1, 2}, {1, 5} or straight into 0 depending on the input.
fn chain_game() -> GameGraph {
    GameGraph::from_fn(
        8,
        2,
        3,
        |s, i, a| match (s, a) {
            (0, _) => 0,
            (1..=5, 0) => s - 1,
            (1..=5, _) => s,
            (6, _) => 7,
            (7, 0) => [1, 2][i as usize],
            (7, 1) => [1, 5][i as usize],
            _ => 0,
        },
        [0],
    )
    .unwrap()
}

#[test]
fn corrective_action_maximizes_mean_robustness() {
    let g = chain_game();
    let d = solve_delayed(&g, 1);
    let h = Heuristic::Robustness(robustness_values(&g));
    // Forward sets after (6, i, [b]) then a': a'=0 → {1,2} (mean 1.5), a'=1 → {1,5} (mean 3.0).
    assert_eq!(forward_set(&g, 7, &[0]), vec![1, 2]);
    assert_eq!(forward_set(&g, 7, &[1]), vec![1, 5]);
    assert_eq!(d.allowed_delayed(&g, 6, 0, &[2]).unwrap().iter().collect::<Vec<_>>(), vec![0, 1]);
    assert_eq!(pick_action(&g, &d, &h, 6, 0, &[2], 2).unwrap(), Pick { action: 1, intervened: true });
    assert_eq!(pick_action(&g, &d, &h, 6, 1, &[0], 0).unwrap(), Pick { action: 0, intervened: false });
}

#[test]
fn ties_go_to_smallest_action() {
    let g = chain_game();
    let d = solve_delayed(&g, 1);
    // Controllability is δ_max everywhere except state 0, so both candidates tie.
    let h = Heuristic::Controllability(controllability_values(&g, 1));
    assert_eq!(pick_action(&g, &d, &h, 6, 0, &[1], 2).unwrap(), Pick { action: 0, intervened: true });
}

#[test]
fn singleton_allowed_set_is_returned() {
    let g = dodge_game();
    let d = solve_delayed(&g, 0);
    let h = Heuristic::Robustness(robustness_values(&g));
    // In state 0 with input 1 only action 0 avoids the crash.
    assert_eq!(pick_action(&g, &d, &h, 0, 1, &[], 1).unwrap(), Pick { action: 0, intervened: true });
}

#[test]
fn zero_delay_shield_is_the_classic_shield() {
    let mut r = rng(21);
    for _ in 0..20 {
        let g = random_game(&mut r, 80, 3, 3);
        let rho = solve_safety(&g);
        let d = solve_delayed(&g, 0);
        let h = Heuristic::Robustness(robustness_values(&g));
        for s in rho.winning_states() {
            for i in 0..3 {
                for a in 0..3 {
                    let pick = pick_action(&g, &d, &h, s, i, &[], a).unwrap();
                    let allowed = rho.allowed_actions(s, i).unwrap();
                    assert!(allowed.contains(pick.action));
                    assert_eq!(pick.intervened, !allowed.contains(a));
                }
            }
        }
    }
}

/// Dodge game plus a hub 4 where action 0 waits and action 1 walks into the
/// dodge state.
fn dodge_with_hub() -> GameGraph {
    GameGraph::from_fn(
        5,
        2,
        2,
        |s, i, a| match s {
            0 if i == a => 3,
            0 => 1 + a,
            4 => if a == 0 { 4 } else { 0 },
            s => s,
        },
        [3],
    )
    .unwrap()
}

#[test]
fn delayed_shield_blocks_the_first_unsafe_commitment() {
    let g = dodge_with_hub();
    let d = solve_delayed(&g, 2);
    let oracle = product_win(&g, 2);
    assert!(oracle.contains(&(4, vec![0, 0])));
    assert!(!oracle.contains(&(4, vec![0, 1])));

    let h = Heuristic::Robustness(robustness_values(&g));
    let mut shield = Shield::new(&g, &d, &h, 4, 0).unwrap();
    let proposals = [0, 0, 1, 0, 1];
    let mut true_state = 4;
    let mut history: Vec<Observation> = Vec::new();
    let mut interventions = Vec::new();
    for (t, &p) in proposals.iter().enumerate() {
        let input = (t % 2) as InputId;
        let obs = (t >= 2).then(|| history[t - 2]);
        let out = shield.step(obs, p).unwrap();
        if out.intervened {
            interventions.push(t);
        }
        history.push(Observation { state: true_state, input });
        true_state = g.successor(true_state, input, out.emitted);
        assert!(!g.is_unsafe(true_state));
    }
    assert_eq!(interventions, vec![2, 4]);
    assert_eq!(true_state, 4);
}

/// Plays `inputs` against the shield from `s0`, returning reached true states.
fn play(
    g: &GameGraph,
    d: &DelayedStrategy,
    h: &Heuristic,
    s0: StateId,
    inputs: &[InputId],
    proposals: &[ActionId],
) -> (Vec<StateId>, u64) {
    let delta = d.delay();
    let mut shield = Shield::new(g, d, h, s0, 0).unwrap();
    let mut states = vec![s0];
    let mut seen: Vec<Observation> = Vec::new();
    for (t, (&i, &p)) in inputs.iter().zip(proposals).enumerate() {
        seen.push(Observation { state: states[t], input: i });
        let obs = (t >= delta).then(|| seen[t - delta]);
        let out = shield.step(obs, p).unwrap();
        states.push(g.successor(states[t], i, out.emitted));
    }
    (states, shield.state().stats.fallbacks)
}

#[test]
fn long_random_plays_never_reach_unsafe() {
    let mut r = rng(0x1000);
    for _ in 0..12 {
        let g = random_game(&mut r, 80, 3, 3);
        for delta in 0..=3 {
            let d = solve_delayed(&g, delta);
            let h = Heuristic::Robustness(robustness_values(&g));
            let Some(&s0) = d.controllable_states(delta).unwrap().first() else { continue };
            let inputs: Vec<InputId> = (0..1000).map(|_| r.gen_range(0..3)).collect();
            let proposals: Vec<ActionId> = (0..1000).map(|_| r.gen_range(0..3)).collect();
            let (states, fallbacks) = play(&g, &d, &h, s0, &inputs, &proposals);
            assert_eq!(fallbacks, 0);
            assert!(states.iter().all(|&s| !g.is_unsafe(s)));
        }
    }
}

/// Depth-first search over every input sequence of a fixed length.
fn adversarial_search(g: &GameGraph, d: &DelayedStrategy, h: &Heuristic, s0: StateId, depth: usize) {
    let delta = d.delay();
    struct Node<'a> {
        shield: Shield<'a>,
        states: Vec<StateId>,
        seen: Vec<Observation>,
    }
    let mut stack = vec![Node { shield: Shield::new(g, d, h, s0, 0).unwrap(), states: vec![s0], seen: vec![] }];
    while let Some(node) = stack.pop() {
        let t = node.seen.len();
        if t == depth {
            continue;
        }
        for i in 0..g.num_inputs() as InputId {
            let mut shield = node.shield.clone();
            let proposal = ((t * 7 + i as usize) % g.num_actions()) as ActionId;
            let here = node.states[t];
            let mut seen = node.seen.clone();
            seen.push(Observation { state: here, input: i });
            let obs = (t >= delta).then(|| seen[t - delta]);
            let out = shield.step(obs, proposal).unwrap();
            assert!(!out.fallback);
            let next = g.successor(here, i, out.emitted);
            assert!(!g.is_unsafe(next), "reached unsafe {next} at depth {t}");
            let mut states = node.states.clone();
            states.push(next);
            stack.push(Node { shield, states, seen });
        }
    }
}

#[test]
fn adversarial_inputs_never_reach_unsafe() {
    let mut r = rng(0xadd);
    for _ in 0..8 {
        let g = random_game(&mut r, 40, 2, 3);
        for delta in 0..=3 {
            let d = solve_delayed(&g, delta);
            let h = Heuristic::Controllability(controllability_values(&g, 3));
            for &s0 in d.controllable_states(delta).unwrap().iter().take(3) {
                adversarial_search(&g, &d, &h, s0, 9);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn identical_runs_give_identical_traces(seed in any::<u64>()) {
        let mut r = rng(seed);
        let g = random_game(&mut r, 50, 2, 3);
        let d = solve_delayed(&g, 2);
        let h = Heuristic::Robustness(robustness_values(&g));
        if let Some(&s0) = d.controllable_states(2).unwrap().first() {
            let inputs: Vec<InputId> = (0..200).map(|_| r.gen_range(0..2)).collect();
            let proposals: Vec<ActionId> = (0..200).map(|_| r.gen_range(0..3)).collect();
            prop_assert_eq!(play(&g, &d, &h, s0, &inputs, &proposals), play(&g, &d, &h, s0, &inputs, &proposals));
        }
    }

    #[test]
    fn warmup_pick_is_allowed(seed in any::<u64>(), proposal in 0u32..3) {
        let mut r = rng(seed);
        let g = random_game(&mut r, 40, 2, 3);
        let d = solve_delayed(&g, 3);
        let h = Heuristic::Robustness(robustness_values(&g));
        for &s0 in d.controllable_states(3).unwrap() {
            let pick = pick_warmup(&g, &d, &h, s0, &[], proposal).unwrap();
            prop_assert!(d.allowed_warmup(s0, &[]).unwrap().contains(pick.action));
        }
    }
}
