//! Deterministic gridworlds loaded from ASCII maps.
//!
//! Map format: `#` wall, `.` free, `S` start, `G` goal, one row per line.
//! The observation is a one-hot vector over all grid cells. Actions are
//! up, down, left, right; moving into a wall or the boundary leaves the
//! agent in place. Reward is -1 every step. Reaching `G` terminates; the
//! step cutoff truncates the episode without stopping the bootstrap.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::Rng;

use super::{Step, TaskQuality};
use crate::auxdiscovery::{SubgoalSpec, SubgoalSource};

/// Canonical 11x11 four-rooms (13x13 with the border) with 4 doorways.
pub const FOUR_ROOMS_MAP: &str = "\
#############
#.....#.....#
#.....#.....#
#...........#
#.....#.....#
#.....#....G#
##.####.....#
#.....####.##
#.....#.....#
#.....#.....#
#...........#
#S....#.....#
#############";

/// Default maze: a serpentine corridor sized for the hidden=500 /
/// buffer=1000 settings.
pub const MAZE_MAP: &str = "\
###############
#S............#
#############.#
#.............#
#.#############
#.............#
#############.#
#.............#
#.#############
#.............#
#############.#
#.............#
#.#############
#............G#
###############";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MapError {
    EmptyMap,
    RaggedRows,
    BadChar(char),
    MissingStart,
    MissingGoal,
}

impl fmt::Display for MapError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MapError::EmptyMap => write!(f, "map has no rows"),
            MapError::RaggedRows => write!(f, "map rows have unequal lengths"),
            MapError::BadChar(c) => write!(f, "unexpected map character {:?}", c),
            MapError::MissingStart => write!(f, "map has no start cell 'S'"),
            MapError::MissingGoal => write!(f, "map has no goal cell 'G'"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct GridWorld {
    rows: usize,
    cols: usize,
    walls: Vec<bool>,
    start: (usize, usize),
    goal: (usize, usize),
    cutoff: usize,
    agent: (usize, usize),
    episode_steps: usize,
}

impl GridWorld {
    pub fn from_ascii(map: &str, cutoff: usize) -> Result<Self, MapError> {
        let lines: Vec<&str> = map.lines().filter(|l| !l.is_empty()).collect();
        if lines.is_empty() {
            return Err(MapError::EmptyMap);
        }
        let cols = lines[0].len();
        if lines.iter().any(|l| l.len() != cols) {
            return Err(MapError::RaggedRows);
        }
        let rows = lines.len();
        let mut walls = vec![false; rows * cols];
        let mut start = None;
        let mut goal = None;
        for (r, line) in lines.iter().enumerate() {
            for (c, ch) in line.chars().enumerate() {
                match ch {
                    '#' => walls[r * cols + c] = true,
                    '.' => {}
                    'S' => start = Some((r, c)),
                    'G' => goal = Some((r, c)),
                    other => return Err(MapError::BadChar(other)),
                }
            }
        }
        let start = start.ok_or(MapError::MissingStart)?;
        let goal = goal.ok_or(MapError::MissingGoal)?;
        Ok(GridWorld {
            rows,
            cols,
            walls,
            start,
            goal,
            cutoff,
            agent: start,
            episode_steps: 0,
        })
    }

    pub fn four_rooms() -> Self {
        Self::from_ascii(FOUR_ROOMS_MAP, 500).expect("builtin map is valid")
    }

    pub fn maze() -> Self {
        Self::from_ascii(MAZE_MAP, 500).expect("builtin map is valid")
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn obs_dim(&self) -> usize {
        self.rows * self.cols
    }

    pub fn start(&self) -> (usize, usize) {
        self.start
    }

    pub fn goal(&self) -> (usize, usize) {
        self.goal
    }

    pub fn is_wall(&self, row: usize, col: usize) -> bool {
        self.walls[row * self.cols + col]
    }

    pub fn cell_index(&self, row: usize, col: usize) -> usize {
        row * self.cols + col
    }

    fn one_hot(&self, cell: (usize, usize)) -> Vec<f64> {
        let mut obs = vec![0.0; self.obs_dim()];
        obs[self.cell_index(cell.0, cell.1)] = 1.0;
        obs
    }

    pub fn reset(&mut self) -> Vec<f64> {
        self.agent = self.start;
        self.episode_steps = 0;
        self.one_hot(self.agent)
    }

    /// Actions: 0 up, 1 down, 2 left, 3 right.
    pub fn step(&mut self, action: usize) -> Step {
        assert!(action < 4, "gridworld has 4 actions");
        let (r, c) = self.agent;
        let (nr, nc) = match action {
            0 => (r.wrapping_sub(1), c),
            1 => (r + 1, c),
            2 => (r, c.wrapping_sub(1)),
            _ => (r, c + 1),
        };
        if nr < self.rows && nc < self.cols && !self.is_wall(nr, nc) {
            self.agent = (nr, nc);
        }
        self.episode_steps += 1;
        let terminal = self.agent == self.goal;
        let truncated = !terminal && self.episode_steps >= self.cutoff;
        Step {
            obs: self.one_hot(self.agent),
            reward: -1.0,
            terminal,
            truncated,
        }
    }

    /// Iterates over all non-wall cells in reading order.
    pub fn free_cells(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.rows)
            .flat_map(move |r| (0..self.cols).map(move |c| (r, c)))
            .filter(move |&(r, c)| !self.is_wall(r, c))
    }

    fn subgoal_at(&self, row: usize, col: usize) -> SubgoalSpec {
        SubgoalSpec::Cell { row, col, obs_index: self.cell_index(row, col) }
    }

    /// Doorway cells: free cells flanked by walls on exactly one axis and
    /// free cells on the other.
    pub fn doorways(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for r in 1..self.rows - 1 {
            for c in 1..self.cols - 1 {
                if self.is_wall(r, c) {
                    continue;
                }
                let up = self.is_wall(r - 1, c);
                let down = self.is_wall(r + 1, c);
                let left = self.is_wall(r, c - 1);
                let right = self.is_wall(r, c + 1);
                if (up && down && !left && !right) || (!up && !down && left && right) {
                    out.push((r, c));
                }
            }
        }
        out
    }

    /// Breadth-first distances from a set of source cells; walls get `usize::MAX`.
    pub fn bfs_distances(&self, sources: &[(usize, usize)]) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.obs_dim()];
        let mut queue: Vec<(usize, usize)> = Vec::new();
        for &(r, c) in sources {
            dist[self.cell_index(r, c)] = 0;
            queue.push((r, c));
        }
        let mut head = 0;
        while head < queue.len() {
            let (r, c) = queue[head];
            head += 1;
            let d = dist[self.cell_index(r, c)];
            let neighbors = [
                (r.wrapping_sub(1), c),
                (r + 1, c),
                (r, c.wrapping_sub(1)),
                (r, c + 1),
            ];
            for (nr, nc) in neighbors {
                if nr < self.rows && nc < self.cols && !self.is_wall(nr, nc) {
                    let idx = self.cell_index(nr, nc);
                    if dist[idx] == usize::MAX {
                        dist[idx] = d + 1;
                        queue.push((nr, nc));
                    }
                }
            }
        }
        dist
    }

    /// Good tasks: the 3 doorway cells most aligned with the start-goal
    /// route, ranked by BFS distance from start plus BFS distance to goal.
    /// Bad tasks: 4 free cells chosen greedily to maximize BFS distance from
    /// the doorways and from each other.
    pub fn hand_designed_subgoals(&self, quality: TaskQuality) -> Vec<SubgoalSpec> {
        let doorways = self.doorways();
        match quality {
            TaskQuality::Good => {
                let from_start = self.bfs_distances(&[self.start]);
                let from_goal = self.bfs_distances(&[self.goal]);
                let mut ranked = doorways.clone();
                ranked.sort_by_key(|&(r, c)| {
                    let k = self.cell_index(r, c);
                    (from_start[k].saturating_add(from_goal[k]), r, c)
                });
                ranked.iter().take(3).map(|&(r, c)| self.subgoal_at(r, c)).collect()
            }
            TaskQuality::Bad => {
                // Greedy farthest-point selection so the corner cells spread
                // over distinct rooms instead of clustering near one corner.
                let candidates: Vec<(usize, usize)> = self
                    .free_cells()
                    .filter(|&cell| cell != self.start && cell != self.goal)
                    .collect();
                let mut selected: Vec<(usize, usize)> = Vec::new();
                for _ in 0..4 {
                    let mut sources = doorways.clone();
                    sources.extend(&selected);
                    let dist = self.bfs_distances(&sources);
                    let best = candidates
                        .iter()
                        .filter(|&&(r, c)| dist[self.cell_index(r, c)] != usize::MAX)
                        .filter(|cell| !selected.contains(cell))
                        .max_by_key(|&&(r, c)| {
                            (dist[self.cell_index(r, c)], core::cmp::Reverse((r, c)))
                        })
                        .copied()
                        .expect("map has free cells");
                    selected.push(best);
                }
                selected.iter().map(|&(r, c)| self.subgoal_at(r, c)).collect()
            }
        }
    }

    /// Renders the layout back to the map format.
    pub fn to_ascii(&self) -> String {
        let mut out = String::new();
        for r in 0..self.rows {
            for c in 0..self.cols {
                let ch = if (r, c) == self.start {
                    'S'
                } else if (r, c) == self.goal {
                    'G'
                } else if self.is_wall(r, c) {
                    '#'
                } else {
                    '.'
                };
                out.push(ch);
            }
            if r + 1 < self.rows {
                out.push('\n');
            }
        }
        out
    }
}

impl SubgoalSource for GridWorld {
    /// Uniform over free cells.
    fn random_subgoal<R: Rng + ?Sized>(&self, rng: &mut R) -> SubgoalSpec {
        let cells: Vec<(usize, usize)> = self.free_cells().collect();
        let (r, c) = cells[rng.random_range(0..cells.len())];
        self.subgoal_at(r, c)
    }
}
