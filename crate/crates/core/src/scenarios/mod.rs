//! Built-in case studies: two car scenarios and the gridworld.

pub mod car;
pub mod grid;

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::game::{ActionId, GameGraph, StateId};

pub use car::{build_intersection_game, build_pedestrian_game, reckless_driver_policy, CarState, PedState};
pub use grid::{build_gridworld_game, GridState, GridWorld};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ScenarioName {
    Intersection,
    Pedestrian,
    Gridworld(usize),
}

impl fmt::Display for ScenarioName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScenarioName::Intersection => f.write_str("intersection"),
            ScenarioName::Pedestrian => f.write_str("pedestrian"),
            ScenarioName::Gridworld(n) => write!(f, "gridworld:{n}"),
        }
    }
}

impl FromStr for ScenarioName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "intersection" => Ok(ScenarioName::Intersection),
            "pedestrian" => Ok(ScenarioName::Pedestrian),
            _ => s
                .strip_prefix("gridworld:")
                .and_then(|n| n.parse().ok())
                .map(ScenarioName::Gridworld)
                .ok_or_else(|| Error::UnknownScenario(s.to_string())),
        }
    }
}

#[derive(Clone, Debug)]
pub enum World {
    Intersection,
    Pedestrian,
    Grid(GridWorld),
}

/// A built scenario: its game plus the semantic map needed to run it.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub name: ScenarioName,
    pub game: GameGraph,
    pub world: World,
}

impl Scenario {
    /// Builds the named scenario. `cap` bounds the number of states.
    pub fn build(name: ScenarioName, cap: u64) -> Result<Self> {
        let fixed = |count: usize| {
            if count as u64 > cap {
                Err(Error::CapExceeded { what: "state", count: count as u64, cap })
            } else {
                Ok(())
            }
        };
        let (game, world) = match name {
            ScenarioName::Intersection => {
                fixed(CarState::COUNT)?;
                (build_intersection_game(), World::Intersection)
            }
            ScenarioName::Pedestrian => {
                fixed(PedState::COUNT)?;
                (build_pedestrian_game(), World::Pedestrian)
            }
            ScenarioName::Gridworld(n) => {
                let (g, w) = build_gridworld_game(n, cap)?;
                (g, World::Grid(w))
            }
        };
        Ok(Scenario { name, game, world })
    }

    /// Emitted when the shield has no safe action left.
    pub fn fallback_action(&self) -> ActionId {
        match self.world {
            World::Intersection | World::Pedestrian => car::BRAKE,
            World::Grid(_) => 0,
        }
    }

    pub fn field_names(&self) -> &'static [&'static str] {
        match self.world {
            World::Intersection => &["p_agent", "v_agent", "p_env", "v_env"],
            World::Pedestrian => &["p_agent", "v_agent", "p_ped"],
            World::Grid(_) => &["robot_x", "robot_y", "kid_x", "kid_y"],
        }
    }

    pub fn fields(&self, s: StateId) -> Vec<i64> {
        match &self.world {
            World::Intersection => {
                let c = CarState::from_id(s);
                [c.p_agent, c.v_agent, c.p_env, c.v_env].map(i64::from).to_vec()
            }
            World::Pedestrian => {
                let c = PedState::from_id(s);
                [c.p_agent, c.v_agent, c.p_ped].map(i64::from).to_vec()
            }
            World::Grid(w) => {
                let g = w.decode(s);
                [g.robot.0, g.robot.1, g.kid.0, g.kid.1].map(i64::from).to_vec()
            }
        }
    }

    /// Parses `name=value` pairs covering every field, e.g.
    /// `p_agent=100,v_agent=20,p_env=90,v_env=20`.
    pub fn parse_state(&self, text: &str) -> Result<StateId> {
        let names = self.field_names();
        let mut values: Vec<Option<i64>> = vec![None; names.len()];
        for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| Error::BadInitialState(format!("expected name=value, got `{part}`")))?;
            let slot = names
                .iter()
                .position(|n| *n == key.trim())
                .ok_or_else(|| Error::BadInitialState(format!("unknown field `{}`", key.trim())))?;
            let v = value
                .trim()
                .parse::<i64>()
                .map_err(|_| Error::BadInitialState(format!("`{}` is not an integer", value.trim())))?;
            values[slot] = Some(v);
        }
        let mut out = Vec::with_capacity(names.len());
        for (name, v) in names.iter().zip(values) {
            let v = v.ok_or_else(|| Error::BadInitialState(format!("missing field `{name}`")))?;
            if !(0..=i64::from(u32::MAX)).contains(&v) {
                return Err(Error::BadInitialState(format!("{name}={v} out of range")));
            }
            out.push(v);
        }
        match &self.world {
            World::Intersection => {
                let c = CarState { p_agent: out[0] as u32, v_agent: out[1] as u32, p_env: out[2] as u32, v_env: out[3] as u32 };
                c.validate()?;
                Ok(c.id())
            }
            World::Pedestrian => {
                let c = PedState { p_agent: out[0] as u32, v_agent: out[1] as u32, p_ped: out[2] as u32 };
                c.validate()?;
                Ok(c.id())
            }
            World::Grid(w) => {
                let cell = |x: i64, y: i64| (x.min(i32::MAX as i64) as i32, y.min(i32::MAX as i64) as i32);
                w.encode(&GridState { robot: cell(out[0], out[1]), kid: cell(out[2], out[3]) })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for name in ["intersection", "pedestrian", "gridworld:0", "gridworld:4"] {
            assert_eq!(name.parse::<ScenarioName>().unwrap().to_string(), name);
        }
        for bad in ["", "grid", "gridworld:", "gridworld:-1", "Intersection"] {
            assert!(matches!(bad.parse::<ScenarioName>(), Err(Error::UnknownScenario(_))));
        }
    }

    #[test]
    fn parse_states() {
        let sc = Scenario::build(ScenarioName::Gridworld(1), u64::MAX).unwrap();
        let s = sc.parse_state("robot_x=0, robot_y=4, kid_x=6, kid_y=4").unwrap();
        assert_eq!(sc.fields(s), vec![0, 4, 6, 4]);
        assert!(sc.parse_state("robot_x=3,robot_y=0,kid_x=0,kid_y=0").is_err());
        assert!(sc.parse_state("robot_x=0,robot_y=4,kid_x=6").is_err());
        assert!(sc.parse_state("robot_x=0,robot_y=4,kid_x=6,kid_y=4,z=1").is_err());

        let ped = Scenario::build(ScenarioName::Pedestrian, u64::MAX).unwrap();
        let s = ped.parse_state("p_agent=100,v_agent=20,p_ped=60").unwrap();
        assert_eq!(ped.fields(s), vec![100, 20, 60]);
        assert!(ped.parse_state("p_agent=101,v_agent=20,p_ped=60").is_err());
        assert!(ped.parse_state("p_agent=100,v_agent=-1,p_ped=60").is_err());
    }

    #[test]
    fn fixed_size_scenarios_respect_the_cap() {
        assert!(matches!(
            Scenario::build(ScenarioName::Pedestrian, 1000),
            Err(Error::CapExceeded { count, .. }) if count == PedState::COUNT as u64
        ));
    }
}
