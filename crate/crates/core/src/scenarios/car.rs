//! Discretized car kinematics: the two-car intersection and the pedestrian
//! crosswalk.
//!
//! Positions are distances to the crossing in metres and only decrease. A car
//! at position 0 has passed the crossing and no longer moves.

use crate::error::{Error, Result};
use crate::game::{ActionId, GameGraph, InputId, Labels, StateId};

pub const ACCELERATE: ActionId = 0;
pub const BRAKE: ActionId = 1;
pub const COAST: ActionId = 2;
pub const CAR_ACTIONS: [&str; 3] = ["accelerate", "brake", "coast"];

pub const MAX_POSITION: u32 = 100;
pub const POSITION_STEP: u32 = 2;
pub const MAX_SPEED: u32 = 20;
/// Number of grid positions `0, 2, …, 100`.
pub const POSITIONS: usize = 51;
/// Number of speeds `0, 1, …, 20`.
pub const SPEEDS: usize = 21;
/// Pedestrian positions `0, 1, …, 100`.
pub const PED_POSITIONS: usize = 101;

pub const PED_MOVES: [i32; 3] = [-1, 0, 1];
pub const PED_INPUTS: [&str; 3] = ["back", "stay", "forward"];

/// Acceleration in m/s² for each action.
pub fn acceleration(action: ActionId) -> i32 {
    match action {
        ACCELERATE => 2,
        BRAKE => -2,
        _ => 0,
    }
}

/// Unrounded update over a 0.5 s step, as `(4·p′, v′)`: quarter metres keep
/// it exact. `p′ = p − v/2 − a/8` and `v′ = v + a/2`.
pub fn raw_update(p: u32, v: u32, action: ActionId) -> (i64, i64) {
    let a = acceleration(action) as i64;
    (4 * p as i64 - 2 * v as i64 - a / 2, v as i64 + a / 2)
}

/// One car step: snap the position down to the grid and the speed up, then clamp.
pub fn car_step(p: u32, v: u32, action: ActionId) -> (u32, u32) {
    if p == 0 {
        return (0, v);
    }
    let (p4, v_raw) = raw_update(p, v, action);
    let snapped = p4.div_euclid(4 * POSITION_STEP as i64) * POSITION_STEP as i64;
    (
        snapped.clamp(0, MAX_POSITION as i64) as u32,
        v_raw.clamp(0, MAX_SPEED as i64) as u32,
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct CarState {
    pub p_agent: u32,
    pub v_agent: u32,
    pub p_env: u32,
    pub v_env: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PedState {
    pub p_agent: u32,
    pub v_agent: u32,
    pub p_ped: u32,
}

fn check_car(p: u32, v: u32) -> Result<()> {
    if p > MAX_POSITION || !p.is_multiple_of(POSITION_STEP) {
        return Err(Error::BadInitialState(format!("position {p} is not in 0, 2, …, {MAX_POSITION}")));
    }
    if v > MAX_SPEED {
        return Err(Error::BadInitialState(format!("speed {v} is above {MAX_SPEED}")));
    }
    Ok(())
}

fn car_index(p: u32, v: u32) -> usize {
    (p / POSITION_STEP) as usize * SPEEDS + v as usize
}

fn car_from_index(idx: usize) -> (u32, u32) {
    ((idx / SPEEDS) as u32 * POSITION_STEP, (idx % SPEEDS) as u32)
}

/// Successor table for a single car: `[car_index * 3 + action] -> car_index`.
fn car_table() -> Vec<u32> {
    let mut table = Vec::with_capacity(POSITIONS * SPEEDS * 3);
    for idx in 0..POSITIONS * SPEEDS {
        let (p, v) = car_from_index(idx);
        for a in 0..3 {
            let (p2, v2) = car_step(p, v, a);
            table.push(car_index(p2, v2) as u32);
        }
    }
    table
}

impl CarState {
    pub const COUNT: usize = POSITIONS * SPEEDS * POSITIONS * SPEEDS;

    pub fn id(&self) -> StateId {
        (car_index(self.p_agent, self.v_agent) * POSITIONS * SPEEDS + car_index(self.p_env, self.v_env)) as StateId
    }

    pub fn from_id(id: StateId) -> Self {
        let cars = POSITIONS * SPEEDS;
        let (p_agent, v_agent) = car_from_index(id as usize / cars);
        let (p_env, v_env) = car_from_index(id as usize % cars);
        CarState { p_agent, v_agent, p_env, v_env }
    }

    pub fn validate(&self) -> Result<()> {
        check_car(self.p_agent, self.v_agent)?;
        check_car(self.p_env, self.v_env)
    }

    /// Both cars at the same distance before the crossing.
    pub fn is_unsafe(&self) -> bool {
        self.p_agent == self.p_env && self.p_agent > 0
    }
}

impl PedState {
    pub const COUNT: usize = POSITIONS * SPEEDS * PED_POSITIONS;

    pub fn id(&self) -> StateId {
        (car_index(self.p_agent, self.v_agent) * PED_POSITIONS + self.p_ped as usize) as StateId
    }

    pub fn from_id(id: StateId) -> Self {
        let (p_agent, v_agent) = car_from_index(id as usize / PED_POSITIONS);
        PedState { p_agent, v_agent, p_ped: id % PED_POSITIONS as u32 }
    }

    pub fn validate(&self) -> Result<()> {
        check_car(self.p_agent, self.v_agent)?;
        if self.p_ped > MAX_POSITION {
            return Err(Error::BadInitialState(format!("pedestrian position {} is above {MAX_POSITION}", self.p_ped)));
        }
        Ok(())
    }

    /// A fast car within 5 m of a pedestrian who is between it and the crossing.
    pub fn is_unsafe(&self) -> bool {
        self.v_agent > 2 && self.p_agent.abs_diff(self.p_ped) < 5 && self.p_ped < self.p_agent
    }
}

pub fn ped_move(p: u32, input: InputId) -> u32 {
    (p as i32 + PED_MOVES[input as usize]).clamp(0, MAX_POSITION as i32) as u32
}

fn labels(inputs: &[&str]) -> Labels {
    Labels {
        inputs: inputs.iter().enumerate().map(|(i, n)| (i as u32, n.to_string())).collect(),
        actions: CAR_ACTIONS.iter().enumerate().map(|(a, n)| (a as u32, n.to_string())).collect(),
        ..Labels::default()
    }
}

/// Agent and environment cars approaching the same crossing. Inputs are the
/// environment car's actions.
pub fn build_intersection_game() -> GameGraph {
    let table = car_table();
    let cars = POSITIONS * SPEEDS;
    let unsafe_states = (0..CarState::COUNT as StateId).filter(|&s| CarState::from_id(s).is_unsafe());
    GameGraph::from_fn(
        CarState::COUNT,
        3,
        3,
        |s, i, a| {
            let (agent, env) = (s as usize / cars, s as usize % cars);
            table[agent * 3 + a as usize] * cars as u32 + table[env * 3 + i as usize]
        },
        unsafe_states,
    )
    .and_then(|g| g.with_labels(labels(&CAR_ACTIONS)))
    .expect("intersection game is well formed")
}

/// The agent car and a pedestrian walking along its path.
pub fn build_pedestrian_game() -> GameGraph {
    let table = car_table();
    let unsafe_states = (0..PedState::COUNT as StateId).filter(|&s| PedState::from_id(s).is_unsafe());
    GameGraph::from_fn(
        PedState::COUNT,
        3,
        3,
        |s, i, a| {
            let car = s as usize / PED_POSITIONS;
            let ped = s % PED_POSITIONS as u32;
            table[car * 3 + a as usize] * PED_POSITIONS as u32 + ped_move(ped, i)
        },
        unsafe_states,
    )
    .and_then(|g| g.with_labels(labels(&PED_INPUTS)))
    .expect("pedestrian game is well formed")
}

/// Always accelerates.
pub fn reckless_driver_policy(_v_agent: u32) -> ActionId {
    ACCELERATE
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brake_and_accelerate_examples() {
        assert_eq!(raw_update(50, 10, BRAKE), (181, 9));
        assert_eq!(car_step(50, 10, BRAKE), (44, 9));
        assert_eq!(raw_update(50, 10, ACCELERATE), (179, 11));
        assert_eq!(car_step(50, 10, ACCELERATE), (44, 11));
    }

    #[test]
    fn crossing_is_absorbing() {
        for a in 0..3 {
            assert_eq!(car_step(0, 0, a), (0, 0));
        }
        assert_eq!(car_step(2, 20, COAST), (0, 20));
    }

    #[test]
    fn top_speed_is_clamped() {
        assert_eq!(reckless_driver_policy(20), ACCELERATE);
        assert_eq!(car_step(100, 20, ACCELERATE).1, 20);
        assert_eq!(car_step(100, 0, BRAKE), (100, 0));
    }

    #[test]
    fn snapping_is_conservative_everywhere() {
        for p in (0..=MAX_POSITION).step_by(2).skip(1) {
            for v in 0..=MAX_SPEED {
                for a in 0..3 {
                    let (p4, v_raw) = raw_update(p, v, a);
                    let snapped = p4.div_euclid(8) * 2;
                    assert!(snapped * 4 <= p4 && p4 - snapped * 4 < 8);
                    let (p2, v2) = car_step(p, v, a);
                    assert!(p2 as i64 <= p4.max(0) / 4 && p2 % 2 == 0);
                    assert!(v2 as i64 >= v_raw.min(MAX_SPEED as i64));
                }
            }
        }
    }

    #[test]
    fn pedestrian_unsafe_examples() {
        assert!(PedState { p_agent: 10, v_agent: 5, p_ped: 7 }.is_unsafe());
        assert!(!PedState { p_agent: 10, v_agent: 2, p_ped: 7 }.is_unsafe());
        assert!(!PedState { p_agent: 10, v_agent: 5, p_ped: 12 }.is_unsafe());
        assert!(!PedState { p_agent: 10, v_agent: 5, p_ped: 5 }.is_unsafe());
        assert_eq!(ped_move(0, 0), 0);
        assert_eq!(ped_move(100, 2), 100);
    }

    #[test]
    fn car_ids_are_bijective() {
        for id in (0..CarState::COUNT as StateId).step_by(97) {
            assert_eq!(CarState::from_id(id).id(), id);
        }
        for id in 0..PedState::COUNT as StateId {
            let s = PedState::from_id(id);
            s.validate().unwrap();
            assert_eq!(s.id(), id);
        }
        assert!(CarState { p_agent: 100, v_agent: 20, p_env: 100, v_env: 20 }.is_unsafe());
        assert!(!CarState { p_agent: 0, v_agent: 0, p_env: 0, v_env: 3 }.is_unsafe());
    }

    #[test]
    fn pedestrian_game_follows_the_dynamics() {
        let g = build_pedestrian_game();
        let s = PedState { p_agent: 50, v_agent: 10, p_ped: 30 };
        let t = PedState::from_id(g.successor(s.id(), 2, BRAKE));
        assert_eq!(t, PedState { p_agent: 44, v_agent: 9, p_ped: 31 });
        for u in g.unsafe_states() {
            assert!(PedState::from_id(*u).is_unsafe());
        }
    }
}
