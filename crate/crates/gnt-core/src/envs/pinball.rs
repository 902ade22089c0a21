//! Continuous pinball domain with simplified ball physics.
//!
//! The ball is a point with state `(x, y, vx, vy)`. Each action adds an
//! impulse to one velocity component (or nothing), then the dynamics run a
//! fixed number of integration sub-steps with per-sub-step drag. A sub-step
//! that would cross an obstacle edge or the arena boundary instead reflects
//! the velocity and leaves the position in place, so the ball never
//! penetrates an obstacle. Reward is -5 per step and there is no cutoff;
//! the episode terminates inside the goal radius.
//!
//! The textual config carries the physics constants as `key value` lines and
//! obstacles as `polygon x0 y0 x1 y1 ...` vertex lists.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use libm::sqrt;
use rand::Rng;

use super::{Step, TaskQuality};
use crate::auxdiscovery::{SubgoalSpec, SubgoalSource};

/// Default arena: start (0.8, 0.5), goal (0.1, 0.1), a few box and wedge
/// obstacles between them. The good hand-designed subgoals sit along the
/// open route to the goal; the bad ones sit in dead-end corners.
pub const DEFAULT_PINBALL_CONFIG: &str = "\
start 0.8 0.5
goal 0.1 0.1
goal_radius 0.04
subgoal_radius 0.035
drag 0.995
substeps 20
dt 0.01
impulse 0.2
velocity_clamp 1.0
good_subgoals 0.55 0.35 0.35 0.2 0.25 0.45
bad_subgoals 0.9 0.9 0.05 0.95 0.95 0.05
polygon 0.35 0.55 0.65 0.55 0.65 0.65 0.35 0.65
polygon 0.45 0.15 0.55 0.15 0.55 0.45 0.45 0.45
polygon 0.1 0.65 0.2 0.75 0.1 0.85
polygon 0.7 0.1 0.8 0.1 0.8 0.3
polygon 0.15 0.3 0.3 0.3 0.3 0.38 0.15 0.38
";

#[derive(Debug, Clone, PartialEq)]
pub enum PinballConfigError {
    UnknownKey(String),
    BadNumber(String),
    OddPolygonCoordinates,
    DegeneratePolygon,
    MissingKey(&'static str),
}

impl fmt::Display for PinballConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PinballConfigError::UnknownKey(k) => write!(f, "unknown config key {:?}", k),
            PinballConfigError::BadNumber(s) => write!(f, "cannot parse number {:?}", s),
            PinballConfigError::OddPolygonCoordinates => {
                write!(f, "polygon needs an even number of coordinates")
            }
            PinballConfigError::DegeneratePolygon => write!(f, "polygon needs >= 3 vertices"),
            PinballConfigError::MissingKey(k) => write!(f, "missing config key {}", k),
        }
    }
}

/// Physics constants and obstacle layout.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PinballConfig {
    pub start: (f64, f64),
    pub goal: (f64, f64),
    pub goal_radius: f64,
    pub subgoal_radius: f64,
    /// Velocity decay applied once per integration sub-step.
    pub drag: f64,
    pub substeps: usize,
    /// Position advance per sub-step at unit velocity.
    pub dt: f64,
    pub impulse: f64,
    pub velocity_clamp: f64,
    pub good_subgoals: Vec<(f64, f64)>,
    pub bad_subgoals: Vec<(f64, f64)>,
    /// Each obstacle is a polygon as a list of vertices.
    pub obstacles: Vec<Vec<(f64, f64)>>,
}

fn parse_floats(parts: &[&str]) -> Result<Vec<f64>, PinballConfigError> {
    parts
        .iter()
        .map(|p| p.parse::<f64>().map_err(|_| PinballConfigError::BadNumber(String::from(*p))))
        .collect()
}

fn pairs(values: Vec<f64>) -> Result<Vec<(f64, f64)>, PinballConfigError> {
    if values.len() % 2 != 0 {
        return Err(PinballConfigError::OddPolygonCoordinates);
    }
    Ok(values.chunks(2).map(|c| (c[0], c[1])).collect())
}

impl PinballConfig {
    pub fn parse(text: &str) -> Result<Self, PinballConfigError> {
        let mut start = None;
        let mut goal = None;
        let mut goal_radius = None;
        let mut subgoal_radius = 0.035;
        let mut drag = 0.995;
        let mut substeps = 20;
        let mut dt = 0.01;
        let mut impulse = 0.2;
        let mut velocity_clamp = 1.0;
        let mut good_subgoals = Vec::new();
        let mut bad_subgoals = Vec::new();
        let mut obstacles = Vec::new();

        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_whitespace();
            let key = parts.next().unwrap();
            let rest: Vec<&str> = parts.collect();
            let values = parse_floats(&rest)?;
            match key {
                "start" => start = Some((values[0], values[1])),
                "goal" => goal = Some((values[0], values[1])),
                "goal_radius" => goal_radius = Some(values[0]),
                "subgoal_radius" => subgoal_radius = values[0],
                "drag" => drag = values[0],
                "substeps" => substeps = values[0] as usize,
                "dt" => dt = values[0],
                "impulse" => impulse = values[0],
                "velocity_clamp" => velocity_clamp = values[0],
                "good_subgoals" => good_subgoals = pairs(values)?,
                "bad_subgoals" => bad_subgoals = pairs(values)?,
                "polygon" => {
                    let vertices = pairs(values)?;
                    if vertices.len() < 3 {
                        return Err(PinballConfigError::DegeneratePolygon);
                    }
                    obstacles.push(vertices);
                }
                other => return Err(PinballConfigError::UnknownKey(String::from(other))),
            }
        }
        Ok(PinballConfig {
            start: start.ok_or(PinballConfigError::MissingKey("start"))?,
            goal: goal.ok_or(PinballConfigError::MissingKey("goal"))?,
            goal_radius: goal_radius.ok_or(PinballConfigError::MissingKey("goal_radius"))?,
            subgoal_radius,
            drag,
            substeps,
            dt,
            impulse,
            velocity_clamp,
            good_subgoals,
            bad_subgoals,
            obstacles,
        })
    }
}

impl Default for PinballConfig {
    fn default() -> Self {
        PinballConfig::parse(DEFAULT_PINBALL_CONFIG).expect("builtin config is valid")
    }
}

#[derive(Debug, Clone)]
pub struct Pinball {
    pub config: PinballConfig,
    x: f64,
    y: f64,
    vx: f64,
    vy: f64,
}

fn point_in_polygon(p: (f64, f64), poly: &[(f64, f64)]) -> bool {
    // even-odd ray casting
    let mut inside = false;
    let n = poly.len();
    let mut j = n - 1;
    for i in 0..n {
        let (xi, yi) = poly[i];
        let (xj, yj) = poly[j];
        if ((yi > p.1) != (yj > p.1))
            && (p.0 < (xj - xi) * (p.1 - yi) / (yj - yi) + xi)
        {
            inside = !inside;
        }
        j = i;
    }
    inside
}

/// Intersection parameter `t` of segment `a -> b` with segment `c -> d`,
/// if any, with `t` measured along `a -> b`.
fn segment_hit(a: (f64, f64), b: (f64, f64), c: (f64, f64), d: (f64, f64)) -> Option<f64> {
    let r = (b.0 - a.0, b.1 - a.1);
    let s = (d.0 - c.0, d.1 - c.1);
    let denom = r.0 * s.1 - r.1 * s.0;
    if denom == 0.0 {
        return None;
    }
    let qp = (c.0 - a.0, c.1 - a.1);
    let t = (qp.0 * s.1 - qp.1 * s.0) / denom;
    let u = (qp.0 * r.1 - qp.1 * r.0) / denom;
    if (0.0..=1.0).contains(&t) && (0.0..=1.0).contains(&u) {
        Some(t)
    } else {
        None
    }
}

impl Pinball {
    pub fn new(config: PinballConfig) -> Self {
        let (x, y) = config.start;
        Pinball { config, x, y, vx: 0.0, vy: 0.0 }
    }

    pub fn default_arena() -> Self {
        Pinball::new(PinballConfig::default())
    }

    pub fn obs_dim(&self) -> usize {
        4
    }

    pub fn position(&self) -> (f64, f64) {
        (self.x, self.y)
    }

    pub fn velocity(&self) -> (f64, f64) {
        (self.vx, self.vy)
    }

    /// Positions pass through unchanged (already in `[0,1]`); velocities map
    /// affinely from `[-clamp, clamp]` to `[0, 1]`.
    pub fn observe(&self) -> Vec<f64> {
        let c = self.config.velocity_clamp;
        vec![
            self.x,
            self.y,
            (self.vx + c) / (2.0 * c),
            (self.vy + c) / (2.0 * c),
        ]
    }

    pub fn reset(&mut self) -> Vec<f64> {
        self.x = self.config.start.0;
        self.y = self.config.start.1;
        self.vx = 0.0;
        self.vy = 0.0;
        self.observe()
    }

    pub fn in_obstacle(&self, p: (f64, f64)) -> bool {
        self.config.obstacles.iter().any(|poly| point_in_polygon(p, poly))
    }

    /// First obstacle or boundary edge crossed by the motion `from -> to`,
    /// as `(t, edge_start, edge_end)`.
    fn first_hit(
        &self,
        from: (f64, f64),
        to: (f64, f64),
    ) -> Option<(f64, (f64, f64), (f64, f64))> {
        let mut best: Option<(f64, (f64, f64), (f64, f64))> = None;
        let mut consider = |t: f64, a: (f64, f64), b: (f64, f64)| {
            if best.map_or(true, |(bt, ..)| t < bt) {
                best = Some((t, a, b));
            }
        };
        for poly in &self.config.obstacles {
            let n = poly.len();
            for i in 0..n {
                let a = poly[i];
                let b = poly[(i + 1) % n];
                if let Some(t) = segment_hit(from, to, a, b) {
                    consider(t, a, b);
                }
            }
        }
        let walls = [
            ((0.0, 0.0), (1.0, 0.0)),
            ((1.0, 0.0), (1.0, 1.0)),
            ((1.0, 1.0), (0.0, 1.0)),
            ((0.0, 1.0), (0.0, 0.0)),
        ];
        for (a, b) in walls {
            if let Some(t) = segment_hit(from, to, a, b) {
                consider(t, a, b);
            }
        }
        best
    }

    fn reflect(&mut self, edge_a: (f64, f64), edge_b: (f64, f64)) {
        let ex = edge_b.0 - edge_a.0;
        let ey = edge_b.1 - edge_a.1;
        let len = sqrt(ex * ex + ey * ey);
        let (nx, ny) = (-ey / len, ex / len);
        let dot = self.vx * nx + self.vy * ny;
        self.vx -= 2.0 * dot * nx;
        self.vy -= 2.0 * dot * ny;
    }

    /// Actions: 0 increase vx, 1 decrease vx, 2 increase vy, 3 decrease vy, 4 nop.
    pub fn step(&mut self, action: usize) -> Step {
        assert!(action < 5, "pinball has 5 actions");
        let clamp = self.config.velocity_clamp;
        match action {
            0 => self.vx += self.config.impulse,
            1 => self.vx -= self.config.impulse,
            2 => self.vy += self.config.impulse,
            3 => self.vy -= self.config.impulse,
            _ => {}
        }
        self.vx = self.vx.clamp(-clamp, clamp);
        self.vy = self.vy.clamp(-clamp, clamp);

        let mut terminal = false;
        for _ in 0..self.config.substeps {
            let from = (self.x, self.y);
            let to = (
                self.x + self.vx * self.config.dt,
                self.y + self.vy * self.config.dt,
            );
            if from != to {
                if let Some((_, a, b)) = self.first_hit(from, to) {
                    // bounce: reflect the velocity, stay put this sub-step
                    self.reflect(a, b);
                } else if self.in_obstacle(to) {
                    // motion parallel to and past an edge; undo by reversing
                    self.vx = -self.vx;
                    self.vy = -self.vy;
                } else {
                    self.x = to.0;
                    self.y = to.1;
                }
            }
            self.vx *= self.config.drag;
            self.vy *= self.config.drag;
            let dx = self.x - self.config.goal.0;
            let dy = self.y - self.config.goal.1;
            if sqrt(dx * dx + dy * dy) <= self.config.goal_radius {
                terminal = true;
                break;
            }
        }
        Step {
            obs: self.observe(),
            reward: -5.0,
            terminal,
            truncated: false,
        }
    }

    pub fn hand_designed_subgoals(&self, quality: TaskQuality) -> Vec<SubgoalSpec> {
        let points = match quality {
            TaskQuality::Good => &self.config.good_subgoals,
            TaskQuality::Bad => &self.config.bad_subgoals,
        };
        points
            .iter()
            .map(|&(x, y)| SubgoalSpec::Region { x, y, radius: self.config.subgoal_radius })
            .collect()
    }
}

impl SubgoalSource for Pinball {
    /// Uniform over obstacle-free positions, rejection sampled.
    fn random_subgoal<R: Rng + ?Sized>(&self, rng: &mut R) -> SubgoalSpec {
        loop {
            let x = rng.random_range(0.0..1.0);
            let y = rng.random_range(0.0..1.0);
            if !self.in_obstacle((x, y)) {
                return SubgoalSpec::Region { x, y, radius: self.config.subgoal_radius };
            }
        }
    }
}
