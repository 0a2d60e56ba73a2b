//! Random cylinder fields with a fixed start and goal.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use super::grid::dijkstra_path_length;
use super::world::{Bounds, Obstacle, World};
use crate::error::{invalid, Error, Result};
use crate::geometry::{Pose2D, RobotBody, Vec2};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioParams {
    pub bounds: Bounds,
    /// Expected obstacles per square meter.
    pub density: f64,
    pub radius_min: f64,
    pub radius_max: f64,
    pub obstacle_height: f64,
    /// No obstacle footprint comes closer than this to the start or goal.
    pub clearance: f64,
    /// Distance of start and goal from the short sides of the bounds.
    pub end_margin: f64,
    /// Reject worlds whose reference path exceeds this multiple of the
    /// straight-line distance.
    pub max_path_ratio: Option<f64>,
    pub max_attempts: usize,
    pub resolution: f64,
    /// Line the inside of the bounds with boxes of this thickness so the
    /// edges are visible to sensors; 0 disables.
    pub wall_thickness: f64,
}

impl Default for ScenarioParams {
    fn default() -> Self {
        Self {
            bounds: Bounds {
                min: Vec2::new(0.0, 0.0),
                max: Vec2::new(5.0, 8.0),
            },
            density: 0.4,
            radius_min: 0.1,
            radius_max: 0.3,
            obstacle_height: 2.0,
            clearance: 1.0,
            end_margin: 1.0,
            max_path_ratio: None,
            max_attempts: 200,
            resolution: super::grid::DEFAULT_RESOLUTION,
            wall_thickness: 0.1,
        }
    }
}

impl ScenarioParams {
    pub fn validate(&self) -> Result<()> {
        Bounds::new(self.bounds.min, self.bounds.max)?;
        if !(self.density >= 0.0 && self.density.is_finite()) {
            return Err(invalid("density must be non-negative"));
        }
        if !(self.radius_min > 0.0 && self.radius_min <= self.radius_max && self.radius_max.is_finite()) {
            return Err(invalid("radius range must satisfy 0 < min ≤ max"));
        }
        if !(self.obstacle_height > 0.0) || !(self.clearance >= 0.0) {
            return Err(invalid("obstacle height must be positive and clearance non-negative"));
        }
        if !(self.end_margin > 0.0 && 2.0 * self.end_margin < self.bounds.length()) {
            return Err(invalid("end margin must leave room between start and goal"));
        }
        if self.max_path_ratio.is_some_and(|r| !(r >= 1.0)) {
            return Err(invalid("max path ratio must be at least 1"));
        }
        if !(self.wall_thickness >= 0.0 && 2.0 * self.wall_thickness < self.bounds.width().min(self.bounds.length())) {
            return Err(invalid("wall thickness must be non-negative and leave room inside the bounds"));
        }
        if self.max_attempts == 0 {
            return Err(invalid("need at least one generation attempt"));
        }
        Ok(())
    }

    pub fn start(&self) -> Pose2D {
        let b = self.bounds;
        Pose2D::new(0.5 * (b.min.x + b.max.x), b.min.y + self.end_margin, 0.0)
    }

    pub fn goal(&self) -> Vec2 {
        let b = self.bounds;
        Vec2::new(0.5 * (b.min.x + b.max.x), b.max.y - self.end_margin)
    }
}

/// Four boxes lining the inside of the bounds.
pub fn perimeter_walls(bounds: &Bounds, thickness: f64, height: f64) -> Vec<Obstacle> {
    let (min, max) = (bounds.min, bounds.max);
    let (cx, cy) = (0.5 * (min.x + max.x), 0.5 * (min.y + max.y));
    let (hx, hy, t) = (0.5 * bounds.width(), 0.5 * bounds.length(), 0.5 * thickness);
    alloc::vec![
        Obstacle::boxed(min.x + t, cy, t, hy, height),
        Obstacle::boxed(max.x - t, cy, t, hy, height),
        Obstacle::boxed(cx, min.y + t, hx, t, height),
        Obstacle::boxed(cx, max.y - t, hx, t, height),
    ]
}

fn sample_obstacles(rng: &mut ChaCha8Rng, p: &ScenarioParams, start: Vec2, goal: Vec2) -> Vec<Obstacle> {
    let area = p.bounds.width() * p.bounds.length();
    let mean = p.density * area;
    let count = if mean > 0.0 {
        Poisson::new(mean).map(|d| d.sample(rng) as usize).unwrap_or(0)
    } else {
        0
    };
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let x = rng.random_range(p.bounds.min.x..=p.bounds.max.x);
        let y = rng.random_range(p.bounds.min.y..=p.bounds.max.y);
        let r = if p.radius_max > p.radius_min {
            rng.random_range(p.radius_min..p.radius_max)
        } else {
            p.radius_min
        };
        let c = Vec2::new(x, y);
        if c.distance(start) - r < p.clearance || c.distance(goal) - r < p.clearance {
            continue;
        }
        out.push(Obstacle::cylinder(x, y, r, p.obstacle_height));
    }
    out
}

/// Draws worlds from a seeded stream until one is traversable by `body`.
/// Returns the world and its reference path length.
pub fn generate_scenario(seed: u64, params: &ScenarioParams, body: &RobotBody) -> Result<(World, f64)> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = params.start();
    let goal = params.goal();
    let straight = start.position().distance(goal);
    for _ in 0..params.max_attempts {
        let mut obstacles = if params.wall_thickness > 0.0 {
            perimeter_walls(&params.bounds, params.wall_thickness, params.obstacle_height)
        } else {
            Vec::new()
        };
        obstacles.extend(sample_obstacles(&mut rng, params, start.position(), goal));
        let world = World {
            obstacles,
            bounds: params.bounds,
            start,
            goal,
        };
        let len = match dijkstra_path_length(&world, body, params.resolution) {
            Ok(len) => len,
            Err(Error::OccupiedEndpoint(_)) => continue,
            Err(e) => return Err(e),
        };
        if len.is_finite() && params.max_path_ratio.is_none_or(|r| len <= r * straight) {
            return Ok((world, len));
        }
    }
    Err(Error::ScenarioGeneration {
        attempts: params.max_attempts,
    })
}
