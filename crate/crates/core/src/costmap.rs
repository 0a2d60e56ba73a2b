//! Robot-centric cost-to-go field built from scan endpoints.
//!
//! Cells near scan points are expensive to cross: within `lethal` of a
//! point the step cost is multiplied by `1 + LETHAL_PENALTY`; over the next
//! `soft` meters the surcharge falls quadratically to zero. A Dijkstra
//! sweep from the goal cell gives every cell its cost to the goal, which a
//! reactive planner can descend without getting trapped in front of gaps
//! that are too narrow for the body.

use alloc::collections::BinaryHeap;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::error::{invalid, Result};
use crate::geometry::Vec2;
use crate::math;

pub const LETHAL_PENALTY: f64 = 25.0;
pub const SOFT_PENALTY: f64 = 2.0;

#[derive(Debug, Clone, PartialEq)]
pub struct CostField {
    resolution: f64,
    /// Cells per side; the grid spans `[-half, half]²` around the robot.
    n: usize,
    half: f64,
    cost: Vec<f64>,
    /// Goal used for the sweep, pulled inside the grid if needed.
    pub goal: Vec2,
}

#[derive(Clone, Copy, PartialEq)]
struct Entry {
    cost: f64,
    cell: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.cell.cmp(&self.cell))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl CostField {
    /// Builds the field over a square of half-size `half_extent` centered
    /// on the robot.
    pub fn build(
        points: &[Vec2],
        goal: Vec2,
        lethal: f64,
        soft: f64,
        resolution: f64,
        half_extent: f64,
    ) -> Result<Self> {
        if !(resolution > 0.0 && half_extent > resolution) || !(lethal >= 0.0 && soft >= 0.0) {
            return Err(invalid("cost field needs positive resolution and extent"));
        }
        // Odd so the robot sits on a cell center and the grid is mirror
        // symmetric about its forward axis.
        let n = 2 * math::ceil(half_extent / resolution) as usize + 1;
        let half = 0.5 * n as f64 * resolution;
        let mut field = Self {
            resolution,
            n,
            half,
            cost: vec![f64::INFINITY; n * n],
            goal,
        };
        // Distance from each cell center to the nearest nearby point.
        let reach = lethal + soft;
        let mut dist = vec![f64::INFINITY; n * n];
        let span = math::ceil(reach / resolution) as isize + 1;
        for p in points {
            let Some((ci, cj)) = field.cell_of(*p) else {
                continue;
            };
            for dj in -span..=span {
                for di in -span..=span {
                    let (i, j) = (ci as isize + di, cj as isize + dj);
                    if i < 0 || j < 0 || i >= n as isize || j >= n as isize {
                        continue;
                    }
                    let k = j as usize * n + i as usize;
                    let d = field.center(i as usize, j as usize).distance(*p);
                    if d < dist[k] {
                        dist[k] = d;
                    }
                }
            }
        }
        let weight: Vec<f64> = dist
            .iter()
            .map(|&d| {
                if d < lethal {
                    1.0 + LETHAL_PENALTY
                } else if d < reach && soft > 0.0 {
                    let t = 1.0 - (d - lethal) / soft;
                    1.0 + SOFT_PENALTY * t * t
                } else {
                    1.0
                }
            })
            .collect();
        let m = field.half - 0.5 * resolution;
        let g = goal.x.abs().max(goal.y.abs());
        field.goal = if g > m { goal * (m / g) } else { goal };
        let start = field.cell_of(field.goal).expect("goal pulled inside the grid");
        let start = start.1 * n + start.0;
        field.cost[start] = 0.0;
        let mut heap = BinaryHeap::new();
        heap.push(Entry { cost: 0.0, cell: start });
        let diag = core::f64::consts::SQRT_2 * resolution;
        while let Some(Entry { cost, cell }) = heap.pop() {
            if cost > field.cost[cell] {
                continue;
            }
            let (i, j) = ((cell % n) as isize, (cell / n) as isize);
            for (di, dj) in [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)] {
                let (a, b) = (i + di, j + dj);
                if a < 0 || b < 0 || a >= n as isize || b >= n as isize {
                    continue;
                }
                let next = b as usize * n + a as usize;
                let step = if di != 0 && dj != 0 { diag } else { resolution };
                let c = cost + step * 0.5 * (weight[cell] + weight[next]);
                if c < field.cost[next] {
                    field.cost[next] = c;
                    heap.push(Entry { cost: c, cell: next });
                }
            }
        }
        Ok(field)
    }

    fn center(&self, i: usize, j: usize) -> Vec2 {
        Vec2::new(
            -self.half + (i as f64 + 0.5) * self.resolution,
            -self.half + (j as f64 + 0.5) * self.resolution,
        )
    }

    fn cell_of(&self, p: Vec2) -> Option<(usize, usize)> {
        let i = math::floor((p.x + self.half) / self.resolution);
        let j = math::floor((p.y + self.half) / self.resolution);
        let n = self.n as f64;
        (i >= 0.0 && j >= 0.0 && i < n && j < n).then_some((i as usize, j as usize))
    }

    /// Bilinear interpolation between cell centers. Outside the grid the
    /// nearest edge value plus the straight distance to it is used.
    pub fn at(&self, p: Vec2) -> f64 {
        let lim = self.half - 0.5 * self.resolution;
        let q = Vec2::new(math::clamp(p.x, -lim, lim), math::clamp(p.y, -lim, lim));
        let extra = p.distance(q);
        let fx = (q.x + self.half) / self.resolution - 0.5;
        let fy = (q.y + self.half) / self.resolution - 0.5;
        let i0 = math::clamp(math::floor(fx), 0.0, (self.n - 2) as f64) as usize;
        let j0 = math::clamp(math::floor(fy), 0.0, (self.n - 2) as f64) as usize;
        let tx = math::clamp(fx - i0 as f64, 0.0, 1.0);
        let ty = math::clamp(fy - j0 as f64, 0.0, 1.0);
        let c = |i: usize, j: usize| self.cost[j * self.n + i];
        let v = (1.0 - ty) * ((1.0 - tx) * c(i0, j0) + tx * c(i0 + 1, j0))
            + ty * ((1.0 - tx) * c(i0, j0 + 1) + tx * c(i0 + 1, j0 + 1));
        v + extra
    }
}
