//! Top-down SVG trajectory plots in world units.
//!
//! The `viewBox` is exactly the world bounds. SVG's y axis points down, so
//! every y coordinate is mirrored about the middle of the bounds.

use std::fmt::Write;

use visnav_core::metrics::Outcome;
use visnav_core::sim::{EpisodeResult, Shape, World};
use visnav_core::{Pose2D, RobotBody, Vec2};

/// Footprints are drawn at every n-th pose.
const FOOTPRINT_EVERY: usize = 5;

fn f(x: f64) -> String {
    // Fixed precision keeps files small and byte-stable.
    let s = format!("{x:.4}");
    if s == "-0.0000" {
        "0.0000".into()
    } else {
        s
    }
}

struct Canvas {
    y_sum: f64,
}

impl Canvas {
    fn pt(&self, p: Vec2) -> (String, String) {
        (f(p.x), f(self.y_sum - p.y))
    }
}

fn footprint_points(c: &Canvas, pose: &Pose2D, body: &RobotBody) -> String {
    body.corners()
        .iter()
        .map(|k| {
            let (x, y) = c.pt(pose.transform_point(*k));
            format!("{x},{y}")
        })
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn trajectory_svg(world: &World, result: &EpisodeResult, body: &RobotBody) -> String {
    let b = world.bounds;
    let c = Canvas { y_sum: b.min.y + b.max.y };
    let w = b.width();
    let h = b.length();
    let px_per_m = 80.0;
    let stroke = 0.02;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="{} {} {} {}">"#,
        f(w * px_per_m),
        f(h * px_per_m),
        f(b.min.x),
        f(b.min.y),
        f(w),
        f(h)
    );
    let _ = writeln!(
        s,
        r##"<rect id="bounds" x="{}" y="{}" width="{}" height="{}" fill="#ffffff" stroke="#000000" stroke-width="{}"/>"##,
        f(b.min.x),
        f(b.min.y),
        f(w),
        f(h),
        f(stroke)
    );
    s.push_str("<g id=\"obstacles\" fill=\"#555555\">\n");
    for o in &world.obstacles {
        match o.shape {
            Shape::Cylinder { center, radius } => {
                let (x, y) = c.pt(center);
                let _ = writeln!(s, r#"<circle cx="{x}" cy="{y}" r="{}"/>"#, f(radius));
            }
            Shape::Box { center, half_extents } => {
                let (x, y) = c.pt(Vec2::new(center.x - half_extents.x, center.y + half_extents.y));
                let _ = writeln!(
                    s,
                    r#"<rect x="{x}" y="{y}" width="{}" height="{}"/>"#,
                    f(2.0 * half_extents.x),
                    f(2.0 * half_extents.y)
                );
            }
        }
    }
    s.push_str("</g>\n");
    let _ = writeln!(
        s,
        r##"<g id="footprints" fill="#1f77b4" fill-opacity="0.12" stroke="#1f77b4" stroke-width="{}">"##,
        f(stroke / 2.0)
    );
    let n = result.trajectory.len();
    for (i, pose) in result.trajectory.iter().enumerate() {
        if i % FOOTPRINT_EVERY == 0 || i + 1 == n {
            let _ = writeln!(s, r#"<polygon points="{}"/>"#, footprint_points(&c, pose, body));
        }
    }
    s.push_str("</g>\n");
    let path: Vec<String> = result
        .trajectory
        .iter()
        .map(|p| {
            let (x, y) = c.pt(p.position());
            format!("{x},{y}")
        })
        .collect();
    let _ = writeln!(
        s,
        r##"<polyline id="trajectory" points="{}" fill="none" stroke="#1f77b4" stroke-width="{}"/>"##,
        path.join(" "),
        f(stroke * 1.5)
    );
    let font = 0.3;
    let (sx, sy) = c.pt(world.start.position());
    let (gx, gy) = c.pt(world.goal);
    let _ = writeln!(
        s,
        r##"<text id="start" x="{sx}" y="{sy}" font-size="{}" fill="#d62728" text-anchor="middle" dominant-baseline="central">S</text>"##,
        f(font)
    );
    let _ = writeln!(
        s,
        r##"<text id="goal" x="{gx}" y="{gy}" font-size="{}" fill="#2ca02c" text-anchor="middle" dominant-baseline="central">G</text>"##,
        f(font)
    );
    if let Some(last) = result.trajectory.last() {
        if result.outcome == Outcome::Collision {
            let (x, y) = c.pt(last.position());
            let _ = writeln!(
                s,
                r##"<circle id="collision" cx="{x}" cy="{y}" r="{}" fill="none" stroke="#d62728" stroke-width="{}"/>"##,
                f(body.circumscribed_radius()),
                f(stroke)
            );
        }
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use visnav_core::sim::{Bounds, Obstacle};

    #[test]
    fn mirrored_y() {
        let c = Canvas { y_sum: 8.0 };
        assert_eq!(c.pt(Vec2::new(1.0, 1.0)), ("1.0000".into(), "7.0000".into()));
        assert_eq!(f(-0.00001), "0.0000");
    }

    #[test]
    fn draws_every_obstacle() {
        let world = World {
            obstacles: vec![Obstacle::cylinder(1.0, 4.0, 0.2, 1.0), Obstacle::boxed(3.0, 4.0, 0.5, 0.2, 1.0)],
            bounds: Bounds::new(Vec2::new(0.0, 0.0), Vec2::new(5.0, 8.0)).unwrap(),
            start: Pose2D::new(2.5, 1.0, 0.0),
            goal: Vec2::new(2.5, 7.0),
        };
        let r = EpisodeResult {
            outcome: Outcome::Collision,
            t_act: 0.1,
            path_length: 0.0,
            trajectory: vec![world.start],
            min_clearance: 0.0,
            steps: 1,
        };
        let svg = trajectory_svg(&world, &r, &RobotBody::new(0.2, 0.2, 0.4, 0.5).unwrap());
        assert_eq!(svg.matches("<circle").count(), 2);
        assert!(svg.contains(r#"<rect x="2.5000" y="3.8000" width="1.0000" height="0.4000"/>"#));
    }
}
