//! Ray-cast depth rendering and ground-truth scans.

use alloc::vec::Vec;

use super::world::{Obstacle, Shape, World};
use crate::depth::{DepthImage, DepthKind};
use crate::error::Result;
use crate::geometry::{CameraExtrinsics, CameraIntrinsics, Mat3, Pose2D, Vec2, Vec3};
use crate::math;
use crate::scan::{ScanConfig, VirtualScan};

/// Rays travelling farther than this report no depth.
pub const MAX_RENDER_RANGE: f64 = 50.0;

/// World-frame camera rotation and center for a robot at `pose`.
pub fn camera_world_pose(pose: &Pose2D, ext: &CameraExtrinsics) -> (Mat3, Vec3) {
    let yaw = Mat3::rot_z(pose.heading);
    let t = yaw * ext.translation + Vec3::new(pose.x, pose.y, 0.0);
    (yaw * ext.rotation, t)
}

fn hit_cylinder(o: Vec3, d: Vec3, center: Vec2, radius: f64, base: f64, top: f64) -> Option<f64> {
    let mut best = f64::INFINITY;
    let ox = o.x - center.x;
    let oy = o.y - center.y;
    let a = d.x * d.x + d.y * d.y;
    if a > 0.0 {
        let b = ox * d.x + oy * d.y;
        let c = ox * ox + oy * oy - radius * radius;
        let disc = b * b - a * c;
        if disc >= 0.0 && c > 0.0 && b < 0.0 {
            let t = c / (-b + math::sqrt(disc));
            let z = o.z + t * d.z;
            if t > 0.0 && z >= base && z <= top {
                best = t;
            }
        }
    }
    if d.z != 0.0 {
        for plane in [base, top] {
            let t = (plane - o.z) / d.z;
            if t > 0.0 && t < best {
                let px = ox + t * d.x;
                let py = oy + t * d.y;
                if px * px + py * py <= radius * radius {
                    best = t;
                }
            }
        }
    }
    best.is_finite().then_some(best)
}

fn hit_box(o: Vec3, d: Vec3, lo: [f64; 3], hi: [f64; 3]) -> Option<f64> {
    let o = o.to_array();
    let d = d.to_array();
    let mut t0: f64 = 0.0;
    let mut t1 = f64::INFINITY;
    for i in 0..3 {
        if d[i] == 0.0 {
            if o[i] < lo[i] || o[i] > hi[i] {
                return None;
            }
        } else {
            let (mut a, mut b) = ((lo[i] - o[i]) / d[i], (hi[i] - o[i]) / d[i]);
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
    (t0 > 0.0).then_some(t0)
}

/// First intersection parameter of the ray `o + t·d` (t > 0) with the
/// ground plane or any obstacle surface.
pub fn cast_ray_3d(obstacles: &[Obstacle], o: Vec3, d: Vec3) -> Option<f64> {
    let mut best = if d.z < 0.0 { -o.z / d.z } else { f64::INFINITY };
    if !(best > 0.0) {
        best = f64::INFINITY;
    }
    for ob in obstacles {
        let t = match ob.shape {
            Shape::Cylinder { center, radius } => hit_cylinder(o, d, center, radius, ob.base, ob.top()),
            Shape::Box {
                center,
                half_extents,
            } => hit_box(
                o,
                d,
                [center.x - half_extents.x, center.y - half_extents.y, ob.base],
                [center.x + half_extents.x, center.y + half_extents.y, ob.top()],
            ),
        };
        if let Some(t) = t {
            best = best.min(t);
        }
    }
    best.is_finite().then_some(best)
}

/// Metric depth (camera-frame `Z`) seen by one camera. Only pixels on the
/// `stride` grid are traced; the rest are left invalid.
pub fn render_depth(
    world: &World,
    pose: &Pose2D,
    intr: &CameraIntrinsics,
    ext: &CameraExtrinsics,
    stride: usize,
) -> Result<DepthImage> {
    let stride = stride.max(1);
    let (rot, origin) = camera_world_pose(pose, ext);
    // Obstacles entirely behind the image plane can't be seen.
    let axis = rot.col(2);
    let visible: Vec<Obstacle> = world
        .obstacles
        .iter()
        .filter(|o| {
            let c = o.center();
            let rel = Vec3::new(c.x - origin.x, c.y - origin.y, 0.0);
            let horiz = math::hypot(axis.x, axis.y);
            horiz < 1e-9 || rel.dot(axis) / horiz > -o.bounding_radius() - 1e-9
        })
        .copied()
        .collect();
    Ok(DepthImage::from_fn(intr.width, intr.height, DepthKind::Metric, |u, v| {
        if u % stride != 0 || v % stride != 0 {
            return None;
        }
        let ray = Vec3::new((u as f64 - intr.cx) / intr.fx, (v as f64 - intr.cy) / intr.fy, 1.0);
        let d = rot * ray;
        let t = cast_ray_3d(&visible, origin, d)?;
        // `ray` has unit camera-z, so `t` is already the depth.
        (t * ray.norm() <= MAX_RENDER_RANGE).then_some(t)
    }))
}

fn band_obstacles<'a>(world: &'a World, cfg: &ScanConfig) -> impl Iterator<Item = &'a Obstacle> {
    let (lo, hi) = (cfg.h_min, cfg.h_max);
    world.obstacles.iter().filter(move |o| o.overlaps_band(lo, hi))
}

/// Exact per-sector minimum distance from the drive center to any
/// obstacle footprint whose vertical extent meets the height band,
/// ignoring occlusion and camera coverage. Bins listed as `false` in
/// `only` are skipped (left at `range_max`).
pub fn ground_truth_scan_masked(
    world: &World,
    pose: &Pose2D,
    cfg: &ScanConfig,
    only: Option<&[bool]>,
) -> Result<VirtualScan> {
    cfg.validate()?;
    let mut scan = VirtualScan::empty(*cfg);
    let origin = pose.position();
    let step = cfg.angle_increment();
    let candidates: Vec<&Obstacle> = band_obstacles(world, cfg)
        .filter(|o| o.footprint_distance(origin) < cfg.range_max)
        .collect();
    for (k, r) in scan.ranges.iter_mut().enumerate() {
        if only.is_some_and(|m| !m[k]) {
            continue;
        }
        // World-frame sector [a0, a1); robot bearing θ maps to heading + θ.
        let a0 = pose.heading + cfg.bin_start(k);
        let a1 = a0 + step;
        let e0 = Vec2::from_angle(a0);
        let e1 = Vec2::from_angle(a1);
        let mut best = f64::INFINITY;
        for o in &candidates {
            if o.footprint_distance(origin) <= 0.0 {
                best = 0.0;
                break;
            }
            let q = o.nearest_point(origin) - origin;
            // Inside the (convex, narrower than π) wedge?
            if e0.cross(q) >= 0.0 && q.cross(e1) > 0.0 {
                best = best.min(q.norm());
                continue;
            }
            for e in [e0, e1] {
                if let Some(t) = o.ray_hit(origin, e) {
                    best = best.min(t);
                }
            }
        }
        if best <= cfg.range_max {
            *r = best;
        }
    }
    Ok(scan)
}

pub fn ground_truth_scan(world: &World, pose: &Pose2D, cfg: &ScanConfig) -> Result<VirtualScan> {
    ground_truth_scan_masked(world, pose, cfg, None)
}

/// Planar ray cast: from `origin` (robot frame) along each robot-frame
/// bearing, the first footprint hit among band obstacles is binned by its
/// bearing from the drive center.
pub fn ray_cast_scan(
    world: &World,
    pose: &Pose2D,
    origin: Vec2,
    bearings: &[f64],
    cfg: &ScanConfig,
) -> Result<VirtualScan> {
    cfg.validate()?;
    let mut scan = VirtualScan::empty(*cfg);
    let o_world = pose.transform_point(origin);
    let obstacles: Vec<&Obstacle> = band_obstacles(world, cfg).collect();
    for &b in bearings {
        let dir = Vec2::from_angle(pose.heading + b);
        let mut best = f64::INFINITY;
        for o in &obstacles {
            if let Some(t) = o.ray_hit(o_world, dir) {
                best = best.min(t);
            }
        }
        if best.is_finite() {
            let hit = pose.inverse_transform_point(o_world + dir * best);
            scan.insert_xy(hit.x, hit.y);
        }
    }
    Ok(scan)
}
