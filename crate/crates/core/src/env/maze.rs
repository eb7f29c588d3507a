//! Grid mazes with a rewarding goal cell.
//!
//! Text format, one row per line: `#` wall, `.` free, `S` start (free; several
//! starts give a uniform start distribution), `G` goal (free, exactly one).
//! States are the free cells in row-major order.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::mdp::{best_response, RewardTable, TabularMdp, TabularPolicy};

use super::tremble::apply_tremble;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MazeAction {
    Up = 0,
    Down = 1,
    Left = 2,
    Right = 3,
    Stay = 4,
}

impl MazeAction {
    pub const ALL: [MazeAction; 5] = [
        MazeAction::Up,
        MazeAction::Down,
        MazeAction::Left,
        MazeAction::Right,
        MazeAction::Stay,
    ];

    fn delta(self) -> (isize, isize) {
        match self {
            MazeAction::Up => (-1, 0),
            MazeAction::Down => (1, 0),
            MazeAction::Left => (0, -1),
            MazeAction::Right => (0, 1),
            MazeAction::Stay => (0, 0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MazeSpec {
    pub width: usize,
    pub height: usize,
    /// Row-major, `true` for blocked cells.
    pub walls: Vec<bool>,
    /// Row-major distribution over cells.
    pub start_dist: Vec<f64>,
    /// `(row, col)`.
    pub goal: (usize, usize),
    pub horizon: usize,
}

impl MazeSpec {
    pub fn parse(text: &str, horizon: usize) -> Result<Self> {
        let rows: Vec<&str> = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .collect();
        if rows.is_empty() {
            return Err(Error::Empty("maze layout"));
        }
        let width = rows[0].chars().count();
        let height = rows.len();
        let mut walls = Vec::with_capacity(width * height);
        let mut starts = Vec::new();
        let mut goal = None;
        for (r, line) in rows.iter().enumerate() {
            if line.chars().count() != width {
                return Err(Error::Construction(format!(
                    "maze row {} has width {}, expected {width}",
                    r + 1,
                    line.chars().count()
                )));
            }
            for (c, ch) in line.chars().enumerate() {
                match ch {
                    '#' => walls.push(true),
                    '.' => walls.push(false),
                    'S' => {
                        walls.push(false);
                        starts.push(r * width + c);
                    }
                    'G' => {
                        walls.push(false);
                        if goal.replace((r, c)).is_some() {
                            return Err(Error::Construction("maze has more than one goal".into()));
                        }
                    }
                    other => {
                        return Err(Error::Construction(format!(
                            "unexpected maze character {other:?} at row {}, column {}",
                            r + 1,
                            c + 1
                        )))
                    }
                }
            }
        }
        let goal = goal.ok_or_else(|| Error::Construction("maze has no goal".into()))?;
        if starts.is_empty() {
            return Err(Error::Construction("maze has no start".into()));
        }
        let mut start_dist = vec![0.0; width * height];
        for &i in &starts {
            start_dist[i] = 1.0 / starts.len() as f64;
        }
        Ok(Self {
            width,
            height,
            walls,
            start_dist,
            goal,
            horizon,
        })
    }

    fn is_free(&self, r: isize, c: isize) -> bool {
        r >= 0
            && c >= 0
            && (r as usize) < self.height
            && (c as usize) < self.width
            && !self.walls[r as usize * self.width + c as usize]
    }
}

/// A built maze: dynamics, goal reward and the optimal expert.
#[derive(Debug, Clone)]
pub struct MazeInstance {
    pub spec: MazeSpec,
    pub mdp: TabularMdp,
    pub reward: RewardTable,
    pub expert: TabularPolicy,
    /// `(row, col)` of each state.
    pub cells: Vec<(usize, usize)>,
}

impl MazeInstance {
    pub fn state_of(&self, row: usize, col: usize) -> Option<usize> {
        self.cells.iter().position(|&c| c == (row, col))
    }

    pub fn goal_state(&self) -> usize {
        self.state_of(self.spec.goal.0, self.spec.goal.1)
            .expect("goal is a free cell")
    }
}

pub fn build_maze(spec: &MazeSpec) -> Result<MazeInstance> {
    build_maze_trembled(spec, 0.0)
}

/// Builds the maze, folds tremble noise `p` into its dynamics and solves for the
/// expert in the noisy environment.
pub fn build_maze_trembled(spec: &MazeSpec, p: f64) -> Result<MazeInstance> {
    let (w, hgt) = (spec.width, spec.height);
    if spec.walls.len() != w * hgt || spec.start_dist.len() != w * hgt {
        return Err(Error::Construction("maze tables do not match its size".into()));
    }
    if spec.horizon == 0 {
        return Err(Error::Range {
            field: "horizon",
            value: 0.0,
            reason: "must be at least 1",
        });
    }
    let (gr, gc) = spec.goal;
    if !spec.is_free(gr as isize, gc as isize) {
        return Err(Error::Construction("goal is blocked or outside the grid".into()));
    }
    let mut cells = Vec::new();
    let mut index = vec![usize::MAX; w * hgt];
    for r in 0..hgt {
        for c in 0..w {
            if !spec.walls[r * w + c] {
                index[r * w + c] = cells.len();
                cells.push((r, c));
            }
        }
    }
    let n = cells.len();
    let mut initial = vec![0.0; n];
    for (i, &p) in spec.start_dist.iter().enumerate() {
        if p > 0.0 {
            if spec.walls[i] {
                return Err(Error::Construction(format!(
                    "start cell ({}, {}) is blocked",
                    i / w,
                    i % w
                )));
            }
            initial[index[i]] = p;
        }
    }

    let next_of = |s: usize, a: MazeAction| -> usize {
        let (r, c) = cells[s];
        let (dr, dc) = a.delta();
        let (nr, nc) = (r as isize + dr, c as isize + dc);
        if spec.is_free(nr, nc) {
            index[nr as usize * w + nc as usize]
        } else {
            s
        }
    };

    // reachability: distance from every start-support state to the goal
    let goal = index[gr * w + gc];
    let mut dist = vec![usize::MAX; n];
    dist[goal] = 0;
    let mut queue = VecDeque::from([goal]);
    while let Some(s) = queue.pop_front() {
        for a in MazeAction::ALL {
            let t = next_of(s, a);
            if dist[t] == usize::MAX {
                dist[t] = dist[s] + 1;
                queue.push_back(t);
            }
        }
    }
    for (s, &p) in initial.iter().enumerate() {
        if p > 0.0 && (dist[s] == usize::MAX || dist[s] + 1 > spec.horizon) {
            let (r, c) = cells[s];
            return Err(Error::Construction(format!(
                "goal is unreachable within the horizon from start ({r}, {c})"
            )));
        }
    }

    let base = TabularMdp::from_rows(n, 5, spec.horizon, initial, |s, a| {
        let mut row = vec![0.0; n];
        row[next_of(s, MazeAction::ALL[a])] = 1.0;
        row
    })?;
    let mdp = apply_tremble(&base, p)?;
    let reward = RewardTable::from_fn(n, 5, |s, _| if s == goal { 1.0 } else { 0.0 })?;
    let expert = best_response(&mdp, &reward)?;
    Ok(MazeInstance {
        spec: spec.clone(),
        mdp,
        reward,
        expert,
        cells,
    })
}

/// The 7x7 layout used by the `maze7` preset: the goal sits inside a U-shaped
/// wall whose opening faces away from the start.
pub const MAZE7: &str = "\
.......
.#...#.
.#.G.#.
.#...#.
.#####.
.......
...S...
";

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_rejects_malformed() {
        assert!(MazeSpec::parse("S.\n.", 3).is_err());
        assert!(MazeSpec::parse("S.G\nG..", 3).is_err());
        assert!(MazeSpec::parse("S..", 3).is_err());
        assert!(MazeSpec::parse("..G", 3).is_err());
        assert!(MazeSpec::parse("S.x\n..G", 3).is_err());
    }

    #[test]
    fn separated_goal_is_a_construction_error() {
        let spec = MazeSpec::parse("S#.\n.#.\n.#G", 20).unwrap();
        assert!(matches!(build_maze(&spec), Err(Error::Construction(_))));
    }

    #[test]
    fn too_short_horizon_is_a_construction_error() {
        let spec = MazeSpec::parse("S..G", 3).unwrap();
        assert!(build_maze(&spec).is_err());
        let spec = MazeSpec::parse("S..G", 4).unwrap();
        assert!(build_maze(&spec).is_ok());
    }

    #[test]
    fn moves_into_walls_stay() {
        let spec = MazeSpec::parse("S#\n.G", 4).unwrap();
        let m = build_maze(&spec).unwrap();
        assert_eq!(m.mdp.num_states(), 3);
        let s = m.state_of(0, 0).unwrap();
        for a in [MazeAction::Up, MazeAction::Left, MazeAction::Right, MazeAction::Stay] {
            assert_eq!(m.mdp.row(s, a as usize)[s], 1.0);
        }
        assert_eq!(m.mdp.row(s, MazeAction::Down as usize)[m.state_of(1, 0).unwrap()], 1.0);
    }

    #[test]
    fn maze7_shape() {
        let spec = MazeSpec::parse(MAZE7, 30).unwrap();
        let m = build_maze_trembled(&spec, 0.05).unwrap();
        assert_eq!(m.mdp.num_states(), 38);
        assert_eq!(m.mdp.num_actions(), 5);
        assert_eq!(m.cells[m.goal_state()], (2, 3));
    }
}
