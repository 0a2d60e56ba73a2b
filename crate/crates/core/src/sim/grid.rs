//! Reference path length on an inflated occupancy grid.

use alloc::collections::BinaryHeap;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use super::collision::blocks_robot;
use super::world::World;
use crate::error::{invalid, Error, Result};
use crate::geometry::{RobotBody, Vec2};
use crate::math;

/// Grid cell size used for reference paths.
pub const DEFAULT_RESOLUTION: f64 = 0.05;

#[derive(Debug, Clone)]
pub struct OccupancyGrid {
    pub origin: Vec2,
    pub resolution: f64,
    pub nx: usize,
    pub ny: usize,
    pub occupied: Vec<bool>,
}

impl OccupancyGrid {
    /// Cells whose centers lie within the circumscribed radius of a
    /// blocking obstacle or of the bounds are occupied.
    pub fn inflated(world: &World, body: &RobotBody, resolution: f64) -> Result<Self> {
        if !(resolution > 0.0 && resolution.is_finite()) {
            return Err(invalid("grid resolution must be positive"));
        }
        let b = world.bounds;
        let nx = math::ceil(b.width() / resolution) as usize;
        let ny = math::ceil(b.length() / resolution) as usize;
        let radius = body.circumscribed_radius();
        let mut g = Self {
            origin: b.min,
            resolution,
            nx,
            ny,
            occupied: vec![false; nx * ny],
        };
        for j in 0..ny {
            for i in 0..nx {
                if b.inner_distance(g.center(i, j)) < radius {
                    g.occupied[j * nx + i] = true;
                }
            }
        }
        for o in world.obstacles.iter().filter(|o| blocks_robot(o, body)) {
            let c = o.center();
            let reach = o.bounding_radius() + radius;
            let (i0, j0) = g.clamped_cell(c - Vec2::new(reach, reach));
            let (i1, j1) = g.clamped_cell(c + Vec2::new(reach, reach));
            for j in j0..=j1 {
                for i in i0..=i1 {
                    if o.footprint_distance(g.center(i, j)) < radius {
                        g.occupied[j * nx + i] = true;
                    }
                }
            }
        }
        Ok(g)
    }

    pub fn center(&self, i: usize, j: usize) -> Vec2 {
        Vec2::new(
            self.origin.x + (i as f64 + 0.5) * self.resolution,
            self.origin.y + (j as f64 + 0.5) * self.resolution,
        )
    }

    fn clamped_cell(&self, p: Vec2) -> (usize, usize) {
        let f = |v: f64, n: usize| math::clamp(math::floor(v / self.resolution), 0.0, (n - 1) as f64) as usize;
        (f(p.x - self.origin.x, self.nx), f(p.y - self.origin.y, self.ny))
    }

    pub fn cell_of(&self, p: Vec2) -> Option<(usize, usize)> {
        let i = math::floor((p.x - self.origin.x) / self.resolution);
        let j = math::floor((p.y - self.origin.y) / self.resolution);
        (i >= 0.0 && j >= 0.0 && (i as usize) < self.nx && (j as usize) < self.ny).then(|| (i as usize, j as usize))
    }

    pub fn is_occupied(&self, i: usize, j: usize) -> bool {
        self.occupied[j * self.nx + i]
    }

    /// 8-connected shortest path length between the cells containing
    /// `from` and `to`; infinite when disconnected.
    pub fn shortest_path(&self, from: Vec2, to: Vec2) -> Result<f64> {
        let start = self.cell_of(from).ok_or(Error::OccupiedEndpoint("start"))?;
        let goal = self.cell_of(to).ok_or(Error::OccupiedEndpoint("goal"))?;
        if self.is_occupied(start.0, start.1) {
            return Err(Error::OccupiedEndpoint("start"));
        }
        if self.is_occupied(goal.0, goal.1) {
            return Err(Error::OccupiedEndpoint("goal"));
        }
        let idx = |(i, j): (usize, usize)| j * self.nx + i;
        let mut dist = vec![f64::INFINITY; self.nx * self.ny];
        let mut heap = BinaryHeap::new();
        dist[idx(start)] = 0.0;
        heap.push(Entry(0.0, start));
        let diag = self.resolution * core::f64::consts::SQRT_2;
        while let Some(Entry(d, cell)) = heap.pop() {
            if cell == goal {
                return Ok(d);
            }
            if d > dist[idx(cell)] {
                continue;
            }
            for (di, dj) in [(-1i64, -1i64), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)] {
                let ni = cell.0 as i64 + di;
                let nj = cell.1 as i64 + dj;
                if ni < 0 || nj < 0 || ni >= self.nx as i64 || nj >= self.ny as i64 {
                    continue;
                }
                let next = (ni as usize, nj as usize);
                if self.is_occupied(next.0, next.1) {
                    continue;
                }
                let nd = d + if di != 0 && dj != 0 { diag } else { self.resolution };
                if nd < dist[idx(next)] {
                    dist[idx(next)] = nd;
                    heap.push(Entry(nd, next));
                }
            }
        }
        Ok(f64::INFINITY)
    }
}

struct Entry(f64, (usize, usize));

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Entry {}
impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Entry {
    // Reversed for a min-heap.
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

/// Length of the shortest collision-free grid path from start to goal.
pub fn dijkstra_path_length(world: &World, body: &RobotBody, resolution: f64) -> Result<f64> {
    OccupancyGrid::inflated(world, body, resolution)?.shortest_path(world.start.position(), world.goal)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Pose2D;
    use crate::sim::world::{Bounds, Obstacle};

    fn body() -> RobotBody {
        RobotBody::new(0.2, 0.2, 0.3, 0.5).unwrap()
    }

    fn corridor(obstacles: Vec<Obstacle>) -> World {
        World {
            obstacles,
            bounds: Bounds::new(Vec2::new(0.0, 0.0), Vec2::new(2.0, 12.0)).unwrap(),
            start: Pose2D::new(1.0, 1.0, 0.0),
            goal: Vec2::new(1.0, 11.0),
        }
    }

    #[test]
    fn empty_corridor_is_straight() {
        let len = dijkstra_path_length(&corridor(vec![]), &body(), 0.05).unwrap();
        assert!((len - 10.0).abs() <= 0.1, "{len}");
    }

    #[test]
    fn wall_with_gap_forces_detour() {
        // Wall at y = 6 with a 1 m gap over x ∈ [6, 7].
        let left = Obstacle::boxed(3.0, 6.0, 3.0, 0.1, 1.0);
        let right = Obstacle::boxed(8.5, 6.0, 1.5, 0.1, 1.0);
        let w = World {
            obstacles: vec![left, right],
            bounds: Bounds::new(Vec2::new(0.0, 0.0), Vec2::new(10.0, 12.0)).unwrap(),
            start: Pose2D::new(2.0, 1.0, 0.0),
            goal: Vec2::new(2.0, 11.0),
        };
        let len = dijkstra_path_length(&w, &body(), 0.05).unwrap();
        // Hand route: start → inflated wall end (6.25, 5.9) → (6.25, 6.1)
        // → goal, each leg measured in the octile metric an 8-connected
        // grid realizes.
        let octile = |dx: f64, dy: f64| dx.max(dy) + (2f64.sqrt() - 1.0) * dx.min(dy);
        let hand = 2.0 * octile(4.25, 4.9) + 0.2;
        assert!((len - hand).abs() / hand < 0.05, "{len} vs {hand}");
        assert!(len > 10.5);

        let blocked = Obstacle::boxed(1.0, 6.0, 1.0, 0.1, 1.0);
        assert_eq!(dijkstra_path_length(&corridor(vec![blocked]), &body(), 0.05).unwrap(), f64::INFINITY);
    }

    #[test]
    fn endpoint_inside_obstacle_is_an_error() {
        let w = corridor(vec![Obstacle::cylinder(1.0, 1.0, 0.2, 1.0)]);
        assert!(matches!(dijkstra_path_length(&w, &body(), 0.05), Err(Error::OccupiedEndpoint("start"))));
    }

    #[test]
    fn overhead_obstacle_is_passable() {
        let w = corridor(vec![Obstacle::boxed(1.0, 6.0, 1.0, 0.1, 0.2).with_base(0.8)]);
        assert!(dijkstra_path_length(&w, &body(), 0.05).unwrap().is_finite());
    }
}
