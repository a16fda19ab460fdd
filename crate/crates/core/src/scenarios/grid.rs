//! The treasure-hunting robot and the chasing kid.
//!
//! The grid is `3n + 4` wide and 9 high. Each of the `n` walls is a column
//! `x = 3k + 3` blocked in rows 0–2 and 6–8, leaving dead ends between walls
//! that open onto the middle corridor.

use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::game::{ActionId, GameGraph, InputId, Labels, StateId};

pub const HEIGHT: i32 = 9;
const WALL_ROWS: [i32; 6] = [0, 1, 2, 6, 7, 8];
const NOT_FREE: u32 = u32::MAX;

/// Robot moves; index 0 is the no-move `N` that replaces illegal moves.
pub const ROBOT_MOVES: [(i32, i32); 17] = [
    (0, 0),
    (1, 0),
    (-1, 0),
    (0, 1),
    (0, -1),
    (2, 0),
    (-2, 0),
    (0, 2),
    (0, -2),
    (1, 2),
    (2, 1),
    (-1, 2),
    (-2, 1),
    (1, -2),
    (2, -1),
    (-1, -2),
    (-2, -1),
];

pub const KID_MOVES: [(i32, i32); 5] = [(0, 0), (1, 0), (-1, 0), (0, 1), (0, -1)];

pub const CHASE_PROBABILITY: f64 = 0.8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct GridState {
    pub robot: (i32, i32),
    pub kid: (i32, i32),
}

/// Layout, move tables and the semantic map of one gridworld.
#[derive(Clone, Debug)]
pub struct GridWorld {
    n: usize,
    width: i32,
    cells: Vec<(i32, i32)>,
    index: Vec<u32>,
    robot_next: Vec<u32>,
    kid_next: Vec<u32>,
    /// `dist[from * F + to]`: fewest robot moves between free cells.
    dist: Vec<u16>,
}

pub fn is_wall(n: usize, x: i32, y: i32) -> bool {
    x % 3 == 0 && x >= 3 && ((x - 3) / 3) < n as i32 && WALL_ROWS.contains(&y)
}

fn mirror_move((dx, dy): (i32, i32)) -> (i32, i32) {
    (-dx, dy)
}

fn move_label((dx, dy): (i32, i32)) -> String {
    format!("x{dx:+}y{dy:+}")
}

impl GridWorld {
    pub fn new(n: usize) -> Self {
        let width = 3 * n as i32 + 4;
        let mut cells = Vec::new();
        let mut index = vec![NOT_FREE; (width * HEIGHT) as usize];
        for y in 0..HEIGHT {
            for x in 0..width {
                if !is_wall(n, x, y) {
                    index[(y * width + x) as usize] = cells.len() as u32;
                    cells.push((x, y));
                }
            }
        }
        let mut world = GridWorld { n, width, cells, index, robot_next: vec![], kid_next: vec![], dist: vec![] };
        world.robot_next = world.move_table(&ROBOT_MOVES);
        world.kid_next = world.move_table(&KID_MOVES);
        world.dist = world.all_distances();
        world
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn width(&self) -> i32 {
        self.width
    }

    pub fn free_cells(&self) -> &[(i32, i32)] {
        &self.cells
    }

    pub fn num_states(&self) -> usize {
        self.cells.len() * self.cells.len()
    }

    pub fn cell_index(&self, (x, y): (i32, i32)) -> Option<u32> {
        if x < 0 || y < 0 || x >= self.width || y >= HEIGHT {
            return None;
        }
        let idx = self.index[(y * self.width + x) as usize];
        (idx != NOT_FREE).then_some(idx)
    }

    fn free(&self, cell: (i32, i32)) -> bool {
        self.cell_index(cell).is_some()
    }

    /// Walks one unit at a time along x then y (or y then x for `y_first`).
    fn path_clear(&self, (x, y): (i32, i32), (dx, dy): (i32, i32), y_first: bool) -> bool {
        let mut pos = (x, y);
        let legs = if y_first { [(0, dy), (dx, 0)] } else { [(dx, 0), (0, dy)] };
        for (lx, ly) in legs {
            for _ in 0..lx.abs().max(ly.abs()) {
                pos = (pos.0 + lx.signum(), pos.1 + ly.signum());
                if !self.free(pos) {
                    return false;
                }
            }
        }
        true
    }

    /// A move is legal when some axis-ordered walk to its target stays on free cells.
    pub fn legal(&self, from: (i32, i32), mv: (i32, i32)) -> bool {
        self.path_clear(from, mv, false) || self.path_clear(from, mv, true)
    }

    fn move_table(&self, moves: &[(i32, i32)]) -> Vec<u32> {
        let mut table = Vec::with_capacity(self.cells.len() * moves.len());
        for (idx, &(x, y)) in self.cells.iter().enumerate() {
            for &mv in moves {
                let target = if self.legal((x, y), mv) { self.cell_index((x + mv.0, y + mv.1)).unwrap() } else { idx as u32 };
                table.push(target);
            }
        }
        table
    }

    fn all_distances(&self) -> Vec<u16> {
        let f = self.cells.len();
        let mut dist = vec![u16::MAX; f * f];
        let mut queue = VecDeque::new();
        for src in 0..f {
            let row = &mut dist[src * f..(src + 1) * f];
            row[src] = 0;
            queue.push_back(src);
            while let Some(c) = queue.pop_front() {
                for &t in &self.robot_next[c * ROBOT_MOVES.len()..(c + 1) * ROBOT_MOVES.len()] {
                    if row[t as usize] == u16::MAX {
                        row[t as usize] = row[c] + 1;
                        queue.push_back(t as usize);
                    }
                }
            }
        }
        dist
    }

    pub fn distance(&self, from: u32, to: u32) -> u16 {
        self.dist[from as usize * self.cells.len() + to as usize]
    }

    pub fn robot_target(&self, cell: u32, a: ActionId) -> u32 {
        self.robot_next[cell as usize * ROBOT_MOVES.len() + a as usize]
    }

    pub fn kid_target(&self, cell: u32, i: InputId) -> u32 {
        self.kid_next[cell as usize * KID_MOVES.len() + i as usize]
    }

    /// `(robot cell index, kid cell index)`.
    pub fn split(&self, s: StateId) -> (u32, u32) {
        let f = self.cells.len() as u32;
        (s / f, s % f)
    }

    pub fn join(&self, robot: u32, kid: u32) -> StateId {
        robot * self.cells.len() as u32 + kid
    }

    pub fn decode(&self, s: StateId) -> GridState {
        let (r, k) = self.split(s);
        GridState { robot: self.cells[r as usize], kid: self.cells[k as usize] }
    }

    pub fn encode(&self, state: &GridState) -> Result<StateId> {
        let lookup = |what: &str, cell: (i32, i32)| {
            self.cell_index(cell)
                .ok_or_else(|| Error::BadInitialState(format!("{what} cell {cell:?} is a wall or out of bounds")))
        };
        Ok(self.join(lookup("robot", state.robot)?, lookup("kid", state.kid)?))
    }

    pub fn step(&self, s: StateId, i: InputId, a: ActionId) -> StateId {
        let (r, k) = self.split(s);
        self.join(self.robot_target(r, a), self.kid_target(k, i))
    }

    pub fn game(&self) -> GameGraph {
        let f = self.cells.len() as u32;
        let unsafe_states = (0..f).map(|c| self.join(c, c));
        let labels = Labels {
            inputs: KID_MOVES.iter().enumerate().map(|(i, &m)| (i as u32, move_label(m))).collect(),
            actions: ROBOT_MOVES.iter().enumerate().map(|(a, &m)| (a as u32, move_label(m))).collect(),
            ..Labels::default()
        };
        GameGraph::from_fn(
            self.num_states(),
            KID_MOVES.len(),
            ROBOT_MOVES.len(),
            |s, i, a| self.step(s, i, a),
            unsafe_states,
        )
        .and_then(|g| g.with_labels(labels))
        .expect("gridworld game is well formed")
    }

    /// Action id of the horizontally mirrored robot move.
    pub fn mirror_action(a: ActionId) -> ActionId {
        let m = mirror_move(ROBOT_MOVES[a as usize]);
        ROBOT_MOVES.iter().position(|&x| x == m).unwrap() as ActionId
    }

    pub fn mirror_input(i: InputId) -> InputId {
        let m = mirror_move(KID_MOVES[i as usize]);
        KID_MOVES.iter().position(|&x| x == m).unwrap() as InputId
    }

    pub fn mirror_state(&self, s: StateId) -> StateId {
        let GridState { robot, kid } = self.decode(s);
        let flip = |(x, y): (i32, i32)| (self.width - 1 - x, y);
        self.encode(&GridState { robot: flip(robot), kid: flip(kid) }).expect("mirror of a free cell")
    }

    /// With probability 0.8 a move that brings the kid closest to the robot
    /// in Manhattan distance, otherwise any legal move.
    pub fn kid_policy(&self, s: StateId, rng: &mut impl Rng) -> InputId {
        let (r, k) = self.split(s);
        let here = self.cells[k as usize];
        let legal: Vec<InputId> =
            (0..KID_MOVES.len() as InputId).filter(|&i| self.legal(here, KID_MOVES[i as usize])).collect();
        if rng.gen_bool(CHASE_PROBABILITY) {
            let (rx, ry) = self.cells[r as usize];
            let manhattan = |i: InputId| {
                let (x, y) = self.cells[self.kid_target(k, i) as usize];
                (x - rx).abs() + (y - ry).abs()
            };
            let best = legal.iter().map(|&i| manhattan(i)).min().unwrap();
            let ties: Vec<InputId> = legal.into_iter().filter(|&i| manhattan(i) == best).collect();
            *ties.choose(rng).unwrap()
        } else {
            *legal.choose(rng).unwrap()
        }
    }

    /// A legal robot move that gets closest to the treasure cell.
    pub fn treasure_agent_policy(&self, s: StateId, treasure: u32, rng: &mut impl Rng) -> ActionId {
        let (r, _) = self.split(s);
        let here = self.cells[r as usize];
        let legal: Vec<ActionId> =
            (0..ROBOT_MOVES.len() as ActionId).filter(|&a| self.legal(here, ROBOT_MOVES[a as usize])).collect();
        let best = legal.iter().map(|&a| self.distance(self.robot_target(r, a), treasure)).min().unwrap();
        let ties: Vec<ActionId> =
            legal.into_iter().filter(|&a| self.distance(self.robot_target(r, a), treasure) == best).collect();
        *ties.choose(rng).unwrap()
    }

    /// A uniformly random free cell other than `avoid`.
    pub fn spawn_treasure(&self, avoid: u32, rng: &mut impl Rng) -> u32 {
        loop {
            let c = rng.gen_range(0..self.cells.len() as u32);
            if c != avoid {
                return c;
            }
        }
    }
}

/// Builds the gridworld game, refusing layouts with more than `cap` states.
pub fn build_gridworld_game(n: usize, cap: u64) -> Result<(GameGraph, GridWorld)> {
    let width = 3 * n as u64 + 4;
    let free = width * HEIGHT as u64 - 6 * n as u64;
    let count = free * free;
    if count > cap {
        return Err(Error::CapExceeded { what: "state", count, cap });
    }
    let world = GridWorld::new(n);
    Ok((world.game(), world))
}
