//! Square-marker pose estimation from four corner pixels.
//!
//! A planar homography between the marker plane and the undistorted image
//! gives the initial pose, which Gauss–Newton then refines on the pixel
//! reprojection error (distortion included).

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geometry::{rodrigues, rodrigues_inv, CameraIntrinsics, Mat3, Vec2, Vec3};
use crate::math::{self, solve_dense};

const MAX_ITERATIONS: usize = 50;
const STEP_TOLERANCE: f64 = 1e-10;
const COLLINEAR_TOLERANCE: f64 = 1e-6;

/// Detected corners of one square marker in one image.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkerObservation {
    pub image_id: String,
    pub marker_id: u32,
    /// Side length in meters.
    pub size: f64,
    /// Raw pixel corners, ordered top-left, top-right, bottom-right,
    /// bottom-left as seen when facing the marker.
    pub corners: [Vec2; 4],
}

/// Marker-to-camera transform: `p_cam = R(rvec)·p_marker + tvec`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarkerPose {
    pub rvec: Vec3,
    pub tvec: Vec3,
    pub reprojection_rms: f64,
}

impl MarkerPose {
    pub fn rotation(&self) -> Mat3 {
        rodrigues(self.rvec)
    }
}

/// Corner coordinates in the marker frame, matching the order of
/// [`MarkerObservation::corners`].
pub fn marker_object_points(size: f64) -> Result<[Vec3; 4]> {
    if !(size > 0.0 && size.is_finite()) {
        return Err(crate::error::invalid("marker size must be positive"));
    }
    let h = 0.5 * size;
    Ok([
        Vec3::new(-h, h, 0.0),
        Vec3::new(h, h, 0.0),
        Vec3::new(h, -h, 0.0),
        Vec3::new(-h, -h, 0.0),
    ])
}

/// Camera-frame depth of each marker corner.
pub fn corner_depths(pose: &MarkerPose, size: f64) -> Result<[f64; 4]> {
    let r = pose.rotation();
    let pts = marker_object_points(size)?;
    let mut out = [0.0; 4];
    for (z, p) in out.iter_mut().zip(pts) {
        *z = (r * p + pose.tvec).z;
        if !(*z > 0.0) {
            return Err(Error::BehindCamera(*z));
        }
    }
    Ok(out)
}

fn check_geometry(pts: &[Vec2; 4]) -> Result<()> {
    if !pts.iter().all(|p| p.is_finite()) {
        return Err(Error::DegenerateTarget("non-finite corner".into()));
    }
    for skip in 0..4 {
        let tri: Vec<Vec2> = (0..4).filter(|&i| i != skip).map(|i| pts[i]).collect();
        let (a, b) = (tri[1] - tri[0], tri[2] - tri[0]);
        let scale = a.norm() * b.norm();
        if !(scale > 0.0) || a.cross(b).abs() <= COLLINEAR_TOLERANCE * scale {
            return Err(Error::DegenerateTarget("three corners are collinear".into()));
        }
    }
    let crosses = |p0: Vec2, p1: Vec2, q0: Vec2, q1: Vec2| {
        let d = p1 - p0;
        let e = q1 - q0;
        let s0 = d.cross(q0 - p0);
        let s1 = d.cross(q1 - p0);
        let t0 = e.cross(p0 - q0);
        let t1 = e.cross(p1 - q0);
        s0 * s1 < 0.0 && t0 * t1 < 0.0
    };
    if crosses(pts[0], pts[1], pts[2], pts[3]) || crosses(pts[1], pts[2], pts[3], pts[0]) {
        return Err(Error::DegenerateTarget("corner quadrilateral self-intersects".into()));
    }
    Ok(())
}

/// Pose from the homography between normalized marker-plane coordinates
/// (corners at `(±1, ±1)`) and undistorted image coordinates.
fn homography_pose(normalized: &[Vec2; 4], size: f64) -> Option<(Mat3, Vec3)> {
    let plane = [(-1.0, 1.0), (1.0, 1.0), (1.0, -1.0), (-1.0, -1.0)];
    let mut m = [[0.0; 8]; 8];
    let mut rhs = [0.0; 8];
    for (i, ((px, py), img)) in plane.iter().zip(normalized).enumerate() {
        m[2 * i] = [*px, *py, 1.0, 0.0, 0.0, 0.0, -img.x * px, -img.x * py];
        rhs[2 * i] = img.x;
        m[2 * i + 1] = [0.0, 0.0, 0.0, *px, *py, 1.0, -img.y * px, -img.y * py];
        rhs[2 * i + 1] = img.y;
    }
    let h = solve_dense(m, rhs, 1e-14)?;
    let mut h1 = Vec3::new(h[0], h[3], h[6]);
    let mut h2 = Vec3::new(h[1], h[4], h[7]);
    let mut h3 = Vec3::new(h[2], h[5], 1.0);
    let norm_sum = h1.norm() + h2.norm();
    if !(norm_sum > 0.0) {
        return None;
    }
    let mut scale = 2.0 / norm_sum;
    if h3.z < 0.0 {
        scale = -scale;
    }
    h1 = h1 * scale;
    h2 = h2 * scale;
    h3 = h3 * scale;
    let r1 = h1 * (1.0 / h1.norm());
    let r2 = h2 - r1 * r1.dot(h2);
    let r2 = r2 * (1.0 / r2.norm());
    let r3 = r1.cross(r2);
    let rot = Mat3::from_cols(r1, r2, r3);
    let t = h3 * (0.5 * size);
    (rot.is_rotation(1e-9) && t.is_finite()).then_some((rot, t))
}

struct Residuals {
    values: [f64; 8],
    jacobian: [[f64; 6]; 8],
    cost: f64,
}

fn reprojection(
    intr: &CameraIntrinsics,
    object: &[Vec3; 4],
    observed: &[Vec2; 4],
    rot: &Mat3,
    t: Vec3,
    with_jacobian: bool,
) -> Option<Residuals> {
    let mut out = Residuals {
        values: [0.0; 8],
        jacobian: [[0.0; 6]; 8],
        cost: 0.0,
    };
    for (i, (obj, obs)) in object.iter().zip(observed).enumerate() {
        let rp = *rot * *obj;
        let pc = rp + t;
        if !(pc.z > 0.0) {
            return None;
        }
        let px = intr.project_point(pc).ok()?;
        let (rx, ry) = (px.x - obs.x, px.y - obs.y);
        out.values[2 * i] = rx;
        out.values[2 * i + 1] = ry;
        out.cost += rx * rx + ry * ry;
        if !with_jacobian {
            continue;
        }
        let iz = 1.0 / pc.z;
        let n = Vec2::new(pc.x * iz, pc.y * iz);
        // d(normalized)/d(p_cam)
        let jn = [[iz, 0.0, -n.x * iz], [0.0, iz, -n.y * iz]];
        let jd = intr.distortion.jacobian(n);
        let f = [intr.fx, intr.fy];
        // d(pixel)/d(p_cam) = diag(f) · J_D · J_norm
        let mut jp = [[0.0; 3]; 2];
        for r in 0..2 {
            for c in 0..3 {
                jp[r][c] = f[r] * (jd[r][0] * jn[0][c] + jd[r][1] * jn[1][c]);
            }
        }
        // d(p_cam)/d(δθ) = −[R·P]×, d(p_cam)/d(δt) = I
        let neg_skew = Mat3::skew(-rp).0;
        for r in 0..2 {
            let row = &mut out.jacobian[2 * i + r];
            for c in 0..3 {
                row[c] = (0..3).map(|k| jp[r][k] * neg_skew[k][c]).sum();
                row[3 + c] = jp[r][c];
            }
        }
    }
    out.cost.is_finite().then_some(out)
}

fn rms(cost: f64) -> f64 {
    math::sqrt(cost / 4.0)
}

/// Six-degree-of-freedom pose of a square marker from its four corners.
pub fn estimate_marker_pose(intr: &CameraIntrinsics, obs: &MarkerObservation) -> Result<MarkerPose> {
    let object = marker_object_points(obs.size)?;
    check_geometry(&obs.corners)?;
    let mut normalized = [Vec2::ZERO; 4];
    for (n, c) in normalized.iter_mut().zip(&obs.corners) {
        *n = intr.undistort_pixel(c.x, c.y)?;
    }
    check_geometry(&normalized)?;
    let (mut rot, mut t) = homography_pose(&normalized, obs.size)
        .ok_or_else(|| Error::DegenerateTarget("homography is singular".into()))?;

    let mut current = reprojection(intr, &object, &obs.corners, &rot, t, true)
        .ok_or(Error::PoseDiverged { trace: Vec::new() })?;
    let mut trace = alloc::vec![rms(current.cost)];
    let mut converged = false;
    for _ in 0..MAX_ITERATIONS {
        if current.cost == 0.0 {
            converged = true;
            break;
        }
        let mut normal = [[0.0; 6]; 6];
        let mut gradient = [0.0; 6];
        for (row, r) in current.jacobian.iter().zip(&current.values) {
            for a in 0..6 {
                gradient[a] -= row[a] * r;
                for b in 0..6 {
                    normal[a][b] += row[a] * row[b];
                }
            }
        }
        let Some(step) = solve_dense(normal, gradient, 1e-300) else {
            break;
        };
        let mut scale = 1.0;
        let mut accepted = None;
        for _ in 0..20 {
            let dtheta = Vec3::new(step[0], step[1], step[2]) * scale;
            let dt = Vec3::new(step[3], step[4], step[5]) * scale;
            let cand_rot = rodrigues(dtheta) * rot;
            let cand_t = t + dt;
            if let Some(res) = reprojection(intr, &object, &obs.corners, &cand_rot, cand_t, true) {
                if res.cost <= current.cost {
                    accepted = Some((cand_rot, cand_t, res, scale));
                    break;
                }
            }
            scale *= 0.5;
        }
        let step_norm = math::sqrt(step.iter().map(|s| s * s).sum::<f64>());
        match accepted {
            Some((r, tt, res, used)) => {
                rot = r;
                t = tt;
                current = res;
                trace.push(rms(current.cost));
                if step_norm * used < STEP_TOLERANCE {
                    converged = true;
                    break;
                }
            }
            None => {
                // No descent left along the Gauss–Newton direction: we are at
                // the floating-point floor of the cost.
                converged = step_norm < 1e-6 * (1.0 + t.norm());
                break;
            }
        }
    }
    if !converged || !(t.z > 0.0) {
        return Err(Error::PoseDiverged { trace });
    }
    Ok(MarkerPose {
        rvec: rodrigues_inv(&rot)?,
        tvec: t,
        reprojection_rms: rms(current.cost),
    })
}
