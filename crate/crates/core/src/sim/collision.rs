//! Footprint collision and clearance against world obstacles.

use super::world::{Obstacle, Shape, World};
use crate::geometry::{Pose2D, RobotBody, Vec2};
use crate::planner::footprint_clearance;

/// Obstacles low enough to touch a robot of the given height.
pub fn blocks_robot(o: &Obstacle, body: &RobotBody) -> bool {
    o.base < body.height
}

fn footprint_world(pose: &Pose2D, body: &RobotBody) -> [Vec2; 4] {
    body.corners().map(|c| pose.transform_point(c))
}

fn project(points: &[Vec2], axis: Vec2) -> (f64, f64) {
    points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
        let s = p.dot(axis);
        (lo.min(s), hi.max(s))
    })
}

fn rect_corners(center: Vec2, half: Vec2) -> [Vec2; 4] {
    [
        Vec2::new(center.x - half.x, center.y - half.y),
        Vec2::new(center.x + half.x, center.y - half.y),
        Vec2::new(center.x + half.x, center.y + half.y),
        Vec2::new(center.x - half.x, center.y + half.y),
    ]
}

/// Strict overlap of two convex quadrilaterals by separating axes.
fn quads_overlap(a: &[Vec2; 4], b: &[Vec2; 4]) -> bool {
    for poly in [a, b] {
        for i in 0..2 {
            let e = poly[i + 1] - poly[i];
            let axis = Vec2::new(-e.y, e.x);
            let (a0, a1) = project(a, axis);
            let (b0, b1) = project(b, axis);
            if a1 <= b0 || b1 <= a0 {
                return false;
            }
        }
    }
    true
}

fn point_segment_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    let t = if len2 > 0.0 {
        ((p - a).dot(ab) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    p.distance(a + ab * t)
}

fn quad_distance(a: &[Vec2; 4], b: &[Vec2; 4]) -> f64 {
    if quads_overlap(a, b) {
        return 0.0;
    }
    let mut best = f64::INFINITY;
    for (p, q) in [(a, b), (b, a)] {
        for v in p {
            for i in 0..4 {
                best = best.min(point_segment_distance(*v, q[i], q[(i + 1) % 4]));
            }
        }
    }
    best
}

/// Gap between the robot footprint at `pose` and one obstacle footprint
/// (zero or negative when touching or overlapping).
pub fn obstacle_gap(pose: &Pose2D, body: &RobotBody, o: &Obstacle) -> f64 {
    match o.shape {
        Shape::Cylinder { center, radius } => {
            footprint_clearance(pose.inverse_transform_point(center), body) - radius
        }
        Shape::Box {
            center,
            half_extents,
        } => quad_distance(&footprint_world(pose, body), &rect_corners(center, half_extents)),
    }
}

/// Whether the footprint overlaps an obstacle or leaves the bounds.
pub fn check_collision(world: &World, pose: &Pose2D, body: &RobotBody) -> bool {
    let corners = footprint_world(pose, body);
    if corners.iter().any(|c| !world.bounds.contains(*c)) {
        return true;
    }
    let reach = body.circumscribed_radius();
    world.obstacles.iter().filter(|o| blocks_robot(o, body)).any(|o| {
        if o.center().distance(pose.position()) > reach + o.bounding_radius() {
            return false;
        }
        match o.shape {
            Shape::Cylinder { .. } => obstacle_gap(pose, body, o) < 0.0,
            Shape::Box {
                center,
                half_extents,
            } => quads_overlap(&corners, &rect_corners(center, half_extents)),
        }
    })
}

/// Smallest gap between the footprint and any blocking obstacle.
pub fn min_clearance(world: &World, pose: &Pose2D, body: &RobotBody) -> f64 {
    world
        .obstacles
        .iter()
        .filter(|o| blocks_robot(o, body))
        .map(|o| obstacle_gap(pose, body, o))
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::world::Bounds;
    use alloc::vec;
    use alloc::vec::Vec;
    use approx::assert_abs_diff_eq;
    use core::f64::consts::FRAC_PI_2;
    use proptest::prelude::*;

    fn body() -> RobotBody {
        RobotBody::new(0.3, 0.2, 0.4, 0.5).unwrap()
    }

    fn world(obstacles: Vec<Obstacle>) -> World {
        World {
            obstacles,
            bounds: Bounds::new(Vec2::new(-5.0, -5.0), Vec2::new(5.0, 5.0)).unwrap(),
            start: Pose2D::identity(),
            goal: Vec2::new(0.0, 4.0),
        }
    }

    #[test]
    fn cylinder_contact() {
        let b = body();
        let w = world(vec![Obstacle::cylinder(0.0, 0.5, 0.1, 1.0)]);
        assert!(!check_collision(&w, &Pose2D::identity(), &b));
        assert_abs_diff_eq!(min_clearance(&w, &Pose2D::identity(), &b), 0.1, epsilon = 1e-12);
        assert!(check_collision(&w, &Pose2D::new(0.0, 0.15, 0.0), &b));
    }

    #[test]
    fn rotated_footprint_against_box() {
        let b = body();
        let w = world(vec![Obstacle::boxed(0.35, 0.0, 0.1, 0.1, 1.0)]);
        // Half-width 0.2: clear facing forward, blocked when facing the box.
        assert!(!check_collision(&w, &Pose2D::identity(), &b));
        assert_abs_diff_eq!(min_clearance(&w, &Pose2D::identity(), &b), 0.05, epsilon = 1e-12);
        assert!(check_collision(&w, &Pose2D::new(0.0, 0.0, -FRAC_PI_2), &b));
    }

    #[test]
    fn overhead_obstacle_does_not_collide() {
        let b = body();
        let w = world(vec![Obstacle::boxed(0.0, 0.0, 1.0, 1.0, 0.3).with_base(0.6)]);
        assert!(!check_collision(&w, &Pose2D::identity(), &b));
    }

    #[test]
    fn leaving_bounds_collides() {
        let b = body();
        let w = world(vec![]);
        assert!(!check_collision(&w, &Pose2D::new(4.7, 0.0, 0.0), &b));
        assert!(check_collision(&w, &Pose2D::new(4.9, 0.0, 0.0), &b));
    }

    proptest! {
        #[test]
        fn box_collision_agrees_with_sampled_footprint(
            x in -1.0f64..1.0, y in -1.0f64..1.0, h in -3.2f64..3.2,
            hx in 0.05f64..0.5, hy in 0.05f64..0.5,
        ) {
            let b = body();
            let o = Obstacle::boxed(0.0, 0.0, hx, hy, 1.0);
            let pose = Pose2D::new(x, y, h);
            let w = world(vec![o]);
            let hit = check_collision(&w, &pose, &b);
            // Dense sample of the footprint as an oracle.
            let mut sampled = false;
            for i in 0..=40 {
                for j in 0..=40 {
                    let lx = -b.half_width() + b.width * i as f64 / 40.0;
                    let ly = -b.l_rear + (b.l_front + b.l_rear) * j as f64 / 40.0;
                    let p = pose.transform_point(Vec2::new(lx, ly));
                    if o.footprint_distance(p) < -1e-9 {
                        sampled = true;
                    }
                }
            }
            if sampled {
                prop_assert!(hit);
            }
            let gap = min_clearance(&w, &pose, &b);
            if !hit {
                prop_assert!(gap >= 0.0);
            } else {
                prop_assert!(gap <= 1e-12);
            }
        }
    }
}
