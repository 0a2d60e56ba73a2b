use alloc::vec::Vec;

use crate::error::{invalid, Result};
use crate::geometry::{Pose2D, Vec2};
use crate::math;

/// Ground footprint of an obstacle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    Cylinder { center: Vec2, radius: f64 },
    /// World-axis-aligned rectangle.
    Box { center: Vec2, half_extents: Vec2 },
}

/// A vertical extrusion of a footprint over `[base, base + height]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Obstacle {
    pub shape: Shape,
    pub base: f64,
    pub height: f64,
}

impl Obstacle {
    pub fn cylinder(x: f64, y: f64, radius: f64, height: f64) -> Self {
        Self {
            shape: Shape::Cylinder {
                center: Vec2::new(x, y),
                radius,
            },
            base: 0.0,
            height,
        }
    }

    pub fn boxed(x: f64, y: f64, hx: f64, hy: f64, height: f64) -> Self {
        Self {
            shape: Shape::Box {
                center: Vec2::new(x, y),
                half_extents: Vec2::new(hx, hy),
            },
            base: 0.0,
            height,
        }
    }

    pub fn with_base(mut self, base: f64) -> Self {
        self.base = base;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self.shape {
            Shape::Cylinder { center, radius } => center.is_finite() && radius > 0.0 && radius.is_finite(),
            Shape::Box {
                center,
                half_extents,
            } => center.is_finite() && half_extents.x > 0.0 && half_extents.y > 0.0 && half_extents.is_finite(),
        };
        if !ok || !(self.height > 0.0 && self.height.is_finite()) || !(self.base >= 0.0 && self.base.is_finite()) {
            return Err(invalid("obstacle dimensions must be finite and positive"));
        }
        Ok(())
    }

    pub fn top(&self) -> f64 {
        self.base + self.height
    }

    /// Whether the vertical extent meets the open band `(lo, hi)`.
    pub fn overlaps_band(&self, lo: f64, hi: f64) -> bool {
        self.base < hi && self.top() > lo
    }

    pub fn center(&self) -> Vec2 {
        match self.shape {
            Shape::Cylinder { center, .. } | Shape::Box { center, .. } => center,
        }
    }

    /// Radius of a circle around [`Obstacle::center`] containing the
    /// footprint.
    pub fn bounding_radius(&self) -> f64 {
        match self.shape {
            Shape::Cylinder { radius, .. } => radius,
            Shape::Box { half_extents, .. } => half_extents.norm(),
        }
    }

    /// Signed distance from `p` to the footprint (negative inside).
    pub fn footprint_distance(&self, p: Vec2) -> f64 {
        match self.shape {
            Shape::Cylinder { center, radius } => p.distance(center) - radius,
            Shape::Box {
                center,
                half_extents,
            } => {
                let dx = (p.x - center.x).abs() - half_extents.x;
                let dy = (p.y - center.y).abs() - half_extents.y;
                if dx <= 0.0 && dy <= 0.0 {
                    dx.max(dy)
                } else {
                    math::hypot(dx.max(0.0), dy.max(0.0))
                }
            }
        }
    }

    /// Closest footprint point to `p` (`p` itself when inside).
    pub fn nearest_point(&self, p: Vec2) -> Vec2 {
        match self.shape {
            Shape::Cylinder { center, radius } => {
                let d = p - center;
                let n = d.norm();
                if n <= radius {
                    p
                } else {
                    center + d * (radius / n)
                }
            }
            Shape::Box {
                center,
                half_extents,
            } => Vec2::new(
                math::clamp(p.x, center.x - half_extents.x, center.x + half_extents.x),
                math::clamp(p.y, center.y - half_extents.y, center.y + half_extents.y),
            ),
        }
    }

    /// Distance along the unit direction `dir` from `origin` to the first
    /// footprint point; zero when `origin` is inside.
    pub fn ray_hit(&self, origin: Vec2, dir: Vec2) -> Option<f64> {
        match self.shape {
            Shape::Cylinder { center, radius } => {
                let oc = origin - center;
                let c = oc.norm_squared() - radius * radius;
                if c <= 0.0 {
                    return Some(0.0);
                }
                let b = oc.dot(dir);
                if b >= 0.0 {
                    return None;
                }
                let disc = b * b - c;
                if disc < 0.0 {
                    return None;
                }
                // Numerically stable smaller root of t² + 2bt + c = 0.
                Some(c / (-b + math::sqrt(disc)))
            }
            Shape::Box {
                center,
                half_extents,
            } => {
                let lo = center - half_extents;
                let hi = center + half_extents;
                slab_2d(origin, dir, lo, hi)
            }
        }
    }
}

fn slab_2d(o: Vec2, d: Vec2, lo: Vec2, hi: Vec2) -> Option<f64> {
    let mut t0: f64 = 0.0;
    let mut t1 = f64::INFINITY;
    for (oa, da, la, ha) in [(o.x, d.x, lo.x, hi.x), (o.y, d.y, lo.y, hi.y)] {
        if da == 0.0 {
            if oa < la || oa > ha {
                return None;
            }
        } else {
            let (mut a, mut b) = ((la - oa) / da, (ha - oa) / da);
            if a > b {
                core::mem::swap(&mut a, &mut b);
            }
            t0 = t0.max(a);
            t1 = t1.min(b);
            if t0 > t1 {
                return None;
            }
        }
    }
    Some(t0)
}

/// Axis-aligned rectangle the robot must stay inside.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub min: Vec2,
    pub max: Vec2,
}

impl Bounds {
    pub fn new(min: Vec2, max: Vec2) -> Result<Self> {
        if !(min.is_finite() && max.is_finite() && min.x < max.x && min.y < max.y) {
            return Err(invalid("bounds must have min < max"));
        }
        Ok(Self { min, max })
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn length(&self) -> f64 {
        self.max.y - self.min.y
    }

    pub fn contains(&self, p: Vec2) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    /// Distance from an interior point to the nearest side (negative
    /// outside).
    pub fn inner_distance(&self, p: Vec2) -> f64 {
        (p.x - self.min.x)
            .min(self.max.x - p.x)
            .min(p.y - self.min.y)
            .min(self.max.y - p.y)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct World {
    pub obstacles: Vec<Obstacle>,
    pub bounds: Bounds,
    pub start: Pose2D,
    pub goal: Vec2,
}

impl World {
    pub fn validate(&self) -> Result<()> {
        for o in &self.obstacles {
            o.validate()?;
        }
        if !self.bounds.contains(self.start.position()) || !self.bounds.contains(self.goal) {
            return Err(invalid("start and goal must lie inside the bounds"));
        }
        Ok(())
    }

    /// Straight-line distance from start to goal.
    pub fn straight_line(&self) -> f64 {
        self.start.position().distance(self.goal)
    }
}
