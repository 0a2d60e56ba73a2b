//! Frames, rigid transforms, rotation vectors and the pinhole camera model.
//!
//! Conventions used throughout the crate:
//!
//! * Camera optical frame: `z` forward along the optical axis, `x` right,
//!   `y` down.
//! * Robot frame: origin at the drive center on the ground, `y` forward,
//!   `x` right, `z` up. Bearings are `θ = atan2(y, x)`, so straight ahead is
//!   `θ = π/2` and positive angular velocity turns the robot to the left.
//! * World frame: a [`Pose2D`] maps robot coordinates into the world by a
//!   rotation of `heading` followed by a translation. With `heading = 0` the
//!   robot faces world `+y`.

use core::ops::{Add, AddAssign, Mul, Neg, Sub};

use crate::error::{invalid, Error, Result};
use crate::math::{self, FRAC_PI_2};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    /// Unit vector at bearing `theta` (robot-frame angle convention).
    pub fn from_angle(theta: f64) -> Self {
        Self::new(math::cos(theta), math::sin(theta))
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        math::hypot(self.x, self.y)
    }

    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    pub fn angle(self) -> f64 {
        math::atan2(self.y, self.x)
    }

    pub fn distance(self, o: Vec2) -> f64 {
        (self - o).norm()
    }

    pub fn rotate(self, angle: f64) -> Vec2 {
        let (s, c) = (math::sin(angle), math::cos(angle));
        Vec2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 {
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm(self) -> f64 {
        math::sqrt(self.dot(self))
    }

    pub fn xy(self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Vec3 {
    fn add_assign(&mut self, o: Vec3) {
        *self = *self + o;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// Row-major 3×3 matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat3(pub [[f64; 3]; 3]);

impl Mat3 {
    pub const IDENTITY: Mat3 = Mat3([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);

    pub fn from_cols(c0: Vec3, c1: Vec3, c2: Vec3) -> Mat3 {
        Mat3([[c0.x, c1.x, c2.x], [c0.y, c1.y, c2.y], [c0.z, c1.z, c2.z]])
    }

    pub fn col(&self, j: usize) -> Vec3 {
        Vec3::new(self.0[0][j], self.0[1][j], self.0[2][j])
    }

    pub fn transpose(&self) -> Mat3 {
        let m = &self.0;
        Mat3([
            [m[0][0], m[1][0], m[2][0]],
            [m[0][1], m[1][1], m[2][1]],
            [m[0][2], m[1][2], m[2][2]],
        ])
    }

    pub fn det(&self) -> f64 {
        let m = &self.0;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    pub fn trace(&self) -> f64 {
        self.0[0][0] + self.0[1][1] + self.0[2][2]
    }

    /// Skew-symmetric matrix `[v]×` with `[v]× w = v × w`.
    pub fn skew(v: Vec3) -> Mat3 {
        Mat3([[0.0, -v.z, v.y], [v.z, 0.0, -v.x], [-v.y, v.x, 0.0]])
    }

    pub fn rot_x(a: f64) -> Mat3 {
        let (s, c) = (math::sin(a), math::cos(a));
        Mat3([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])
    }

    pub fn rot_y(a: f64) -> Mat3 {
        let (s, c) = (math::sin(a), math::cos(a));
        Mat3([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])
    }

    pub fn rot_z(a: f64) -> Mat3 {
        let (s, c) = (math::sin(a), math::cos(a));
        Mat3([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    }

    /// Largest absolute entry of `RᵀR − I`.
    pub fn orthogonality_error(&self) -> f64 {
        let p = self.transpose() * *self;
        let mut e: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                let target = if i == j { 1.0 } else { 0.0 };
                e = e.max((p.0[i][j] - target).abs());
            }
        }
        e
    }

    pub fn is_rotation(&self, tol: f64) -> bool {
        self.orthogonality_error() <= tol && (self.det() - 1.0).abs() <= tol
    }

    fn scale(&self, s: f64) -> Mat3 {
        let mut out = self.0;
        for row in out.iter_mut() {
            for v in row.iter_mut() {
                *v *= s;
            }
        }
        Mat3(out)
    }
}

impl Mul for Mat3 {
    type Output = Mat3;
    fn mul(self, o: Mat3) -> Mat3 {
        let mut out = [[0.0; 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = (0..3).map(|k| self.0[i][k] * o.0[k][j]).sum();
            }
        }
        Mat3(out)
    }
}

impl Mul<Vec3> for Mat3 {
    type Output = Vec3;
    fn mul(self, v: Vec3) -> Vec3 {
        let m = &self.0;
        Vec3::new(
            m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
            m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
            m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z,
        )
    }
}

impl Add for Mat3 {
    type Output = Mat3;
    fn add(self, o: Mat3) -> Mat3 {
        let mut out = self.0;
        for i in 0..3 {
            for j in 0..3 {
                out[i][j] += o.0[i][j];
            }
        }
        Mat3(out)
    }
}

/// Rotation matrix from an axis-angle vector (exponential map).
pub fn rodrigues(rvec: Vec3) -> Mat3 {
    let theta2 = rvec.dot(rvec);
    let theta = math::sqrt(theta2);
    let (a, b) = if theta < 1e-6 {
        // Taylor expansions of sin(θ)/θ and (1 − cos θ)/θ².
        (1.0 - theta2 / 6.0, 0.5 - theta2 / 24.0)
    } else {
        (
            math::sin(theta) / theta,
            (1.0 - math::cos(theta)) / theta2,
        )
    };
    let k = Mat3::skew(rvec);
    Mat3::IDENTITY + k.scale(a) + (k * k).scale(b)
}

/// Axis-angle vector of a rotation matrix, with angle in `[0, π]`.
pub fn rodrigues_inv(r: &Mat3) -> Result<Vec3> {
    let orthogonality_error = r.orthogonality_error();
    let det = r.det();
    if !(orthogonality_error <= 1e-6) || !((det - 1.0).abs() <= 1e-6) {
        return Err(Error::InvalidRotation {
            orthogonality_error,
            det,
        });
    }
    let m = &r.0;
    let c = math::clamp((r.trace() - 1.0) * 0.5, -1.0, 1.0);
    // sin(θ)·axis from the antisymmetric part.
    let v = Vec3::new(m[2][1] - m[1][2], m[0][2] - m[2][0], m[1][0] - m[0][1]) * 0.5;
    let s = v.norm();
    let theta = math::atan2(s, c);
    if theta < 1e-6 {
        return Ok(v * (1.0 + s * s / 6.0));
    }
    if c > -0.99 {
        return Ok(v * (theta / s));
    }
    // Near θ = π the antisymmetric part vanishes; recover the axis from the
    // symmetric part (R + Rᵀ)/2 = cos θ·I + (1 − cos θ)·n nᵀ.
    let mut nnt = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let sym = 0.5 * (m[i][j] + m[j][i]) - if i == j { c } else { 0.0 };
            nnt[i][j] = sym / (1.0 - c);
        }
    }
    let k = (0..3)
        .max_by(|&a, &b| nnt[a][a].total_cmp(&nnt[b][b]))
        .unwrap_or(0);
    let nk = math::sqrt(nnt[k][k].max(0.0));
    let mut n = Vec3::new(nnt[0][k] / nk, nnt[1][k] / nk, nnt[2][k] / nk);
    n = n * (1.0 / n.norm());
    if n.dot(v) < 0.0 {
        n = -n;
    }
    Ok(n * theta)
}

/// Planar pose in the world frame. The heading is normalized to `(−π, π]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Pose2D {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

impl Pose2D {
    pub fn new(x: f64, y: f64, heading: f64) -> Self {
        Self {
            x,
            y,
            heading: math::wrap_angle(heading),
        }
    }

    pub fn identity() -> Self {
        Self::default()
    }

    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    /// World-frame direction of the robot's forward (`+y`) axis.
    pub fn forward(&self) -> Vec2 {
        Vec2::new(-math::sin(self.heading), math::cos(self.heading))
    }

    /// Maps a point from this pose's local frame into the parent frame.
    pub fn transform_point(&self, p: Vec2) -> Vec2 {
        p.rotate(self.heading) + self.position()
    }

    /// Maps a point from the parent frame into this pose's local frame.
    pub fn inverse_transform_point(&self, p: Vec2) -> Vec2 {
        (p - self.position()).rotate(-self.heading)
    }

    /// `self ∘ other`: `other` is expressed in this pose's local frame.
    pub fn compose(&self, other: &Pose2D) -> Pose2D {
        let p = self.transform_point(other.position());
        Pose2D::new(p.x, p.y, self.heading + other.heading)
    }

    /// Integrates a constant twist exactly (circular arc, or a straight line
    /// when `omega = 0`).
    pub fn integrate(&self, v: f64, omega: f64, dt: f64) -> Pose2D {
        let dh = omega * dt;
        let mid = self.heading + 0.5 * dh;
        let half = 0.5 * dh;
        let sinc = if half.abs() < 1e-8 {
            1.0 - half * half / 6.0
        } else {
            math::sin(half) / half
        };
        let dist = v * dt * sinc;
        Pose2D::new(
            self.x - dist * math::sin(mid),
            self.y + dist * math::cos(mid),
            self.heading + dh,
        )
    }
}

/// Brown–Conrady radial-tangential distortion coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Distortion {
    pub k1: f64,
    pub k2: f64,
    pub p1: f64,
    pub p2: f64,
    pub k3: f64,
}

impl Distortion {
    pub fn is_zero(&self) -> bool {
        *self == Distortion::default()
    }

    /// Applies the distortion model to normalized image coordinates.
    /// `1 + k1·r² + k2·r⁴ + k3·r⁶`.
    pub fn radial_factor(&self, p: Vec2) -> f64 {
        let r2 = p.norm_squared();
        1.0 + r2 * (self.k1 + r2 * (self.k2 + r2 * self.k3))
    }

    pub fn distort(&self, p: Vec2) -> Vec2 {
        let (x, y) = (p.x, p.y);
        let r2 = x * x + y * y;
        let radial = self.radial_factor(p);
        Vec2::new(
            x * radial + 2.0 * self.p1 * x * y + self.p2 * (r2 + 2.0 * x * x),
            y * radial + self.p1 * (r2 + 2.0 * y * y) + 2.0 * self.p2 * x * y,
        )
    }

    /// Jacobian of [`Distortion::distort`], row-major.
    pub fn jacobian(&self, p: Vec2) -> [[f64; 2]; 2] {
        let (x, y) = (p.x, p.y);
        let r2 = x * x + y * y;
        let radial = 1.0 + r2 * (self.k1 + r2 * (self.k2 + r2 * self.k3));
        let dr = self.k1 + r2 * (2.0 * self.k2 + 3.0 * self.k3 * r2);
        let cross = 2.0 * x * y * dr + 2.0 * self.p1 * x + 2.0 * self.p2 * y;
        [
            [
                radial + 2.0 * x * x * dr + 2.0 * self.p1 * y + 6.0 * self.p2 * x,
                cross,
            ],
            [
                cross,
                radial + 2.0 * y * y * dr + 6.0 * self.p1 * y + 2.0 * self.p2 * x,
            ],
        ]
    }
}

const UNDISTORT_MAX_ITERS: usize = 50;
const UNDISTORT_TOL: f64 = 1e-10;

/// Pinhole intrinsics. Pixel `(u, v)` addresses the center of column `u`,
/// row `v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
    pub distortion: Distortion,
}

impl CameraIntrinsics {
    pub fn new(
        fx: f64,
        fy: f64,
        cx: f64,
        cy: f64,
        width: usize,
        height: usize,
        distortion: Distortion,
    ) -> Result<Self> {
        let intr = Self {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
            distortion,
        };
        intr.validate()?;
        Ok(intr)
    }

    /// Distortion-free intrinsics with a horizontal field of view `hfov`
    /// (radians) spanning the full image width and square pixels.
    pub fn from_hfov(width: usize, height: usize, hfov: f64) -> Result<Self> {
        if !(hfov > 0.0 && hfov < math::PI) {
            return Err(invalid("horizontal field of view must lie in (0, π)"));
        }
        let f = 0.5 * width as f64 / math::tan(0.5 * hfov);
        Self::new(
            f,
            f,
            0.5 * (width as f64 - 1.0),
            0.5 * (height as f64 - 1.0),
            width,
            height,
            Distortion::default(),
        )
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fx > 0.0 && self.fy > 0.0 && self.fx.is_finite() && self.fy.is_finite()) {
            return Err(invalid("focal lengths must be finite and positive"));
        }
        if self.width == 0 || self.height == 0 {
            return Err(invalid("image dimensions must be non-zero"));
        }
        if !(self.cx >= 0.0 && self.cx < self.width as f64) {
            return Err(invalid("cx must lie inside [0, width)"));
        }
        if !(self.cy >= 0.0 && self.cy < self.height as f64) {
            return Err(invalid("cy must lie inside [0, height)"));
        }
        let d = &self.distortion;
        if ![d.k1, d.k2, d.p1, d.p2, d.k3].iter().all(|c| c.is_finite()) {
            return Err(invalid("distortion coefficients must be finite"));
        }
        Ok(())
    }

    /// Back-projects an (already undistorted) pixel at depth `z` into the
    /// camera frame.
    pub fn backproject_pixel(&self, u: f64, v: f64, z: f64) -> Result<Vec3> {
        if !(z.is_finite() && z > 0.0) {
            return Err(Error::InvalidDepth(z));
        }
        Ok(Vec3::new(
            (u - self.cx) * z / self.fx,
            (v - self.cy) * z / self.fy,
            z,
        ))
    }

    /// Projects a camera-frame point to pixel coordinates, applying lens
    /// distortion.
    pub fn project_point(&self, p: Vec3) -> Result<Vec2> {
        if !(p.z > 0.0) {
            return Err(Error::BehindCamera(p.z));
        }
        let d = self.distortion.distort(Vec2::new(p.x / p.z, p.y / p.z));
        Ok(self.normalized_to_pixel(d))
    }

    pub fn normalized_to_pixel(&self, p: Vec2) -> Vec2 {
        Vec2::new(self.fx * p.x + self.cx, self.fy * p.y + self.cy)
    }

    pub fn pixel_to_normalized(&self, u: f64, v: f64) -> Vec2 {
        Vec2::new((u - self.cx) / self.fx, (v - self.cy) / self.fy)
    }

    /// Normalized, distortion-free image coordinates of a raw pixel.
    ///
    /// Newton iteration on the forward distortion model; fails if the
    /// residual is still above 1e-10 after 50 iterations.
    pub fn undistort_pixel(&self, u: f64, v: f64) -> Result<Vec2> {
        let target = self.pixel_to_normalized(u, v);
        if self.distortion.is_zero() {
            return Ok(target);
        }
        let mut p = target;
        let mut residual = f64::INFINITY;
        for _ in 0..UNDISTORT_MAX_ITERS {
            let r = self.distortion.distort(p) - target;
            residual = r.norm();
            if residual < 1e-15 {
                break;
            }
            let j = self.distortion.jacobian(p);
            let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
            if !(det.abs() > 1e-300) {
                break;
            }
            let dx = (j[1][1] * r.x - j[0][1] * r.y) / det;
            let dy = (-j[1][0] * r.x + j[0][0] * r.y) / det;
            p = Vec2::new(p.x - dx, p.y - dy);
            if dx.abs() + dy.abs() < 1e-17 {
                residual = (self.distortion.distort(p) - target).norm();
                break;
            }
        }
        // A root past the fold of the radial polynomial is not a physical ray.
        if residual.is_finite() && residual < UNDISTORT_TOL && p.is_finite() && self.distortion.radial_factor(p) > 0.0 {
            Ok(p)
        } else {
            Err(Error::UndistortDiverged {
                u,
                v,
                iterations: UNDISTORT_MAX_ITERS,
                residual,
            })
        }
    }

    /// Pinhole-only (rectified) pixel of a raw, possibly distorted pixel.
    pub fn rectify_pixel(&self, u: f64, v: f64) -> Result<Vec2> {
        Ok(self.normalized_to_pixel(self.undistort_pixel(u, v)?))
    }
}

/// Rotation that carries the camera optical axes onto the robot axes for a
/// level, forward-looking camera: camera `z → robot y`, `x → x`, `y → −z`.
pub fn optical_to_robot_base() -> Mat3 {
    Mat3([[1.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.0, -1.0, 0.0]])
}

/// Rigid transform from the camera frame to the robot frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraExtrinsics {
    pub rotation: Mat3,
    /// `x` lateral offset (right positive), `y` longitudinal offset (forward
    /// positive), `z` mounting height above the ground.
    pub translation: Vec3,
}

impl CameraExtrinsics {
    pub fn new(rotation: Mat3, translation: Vec3) -> Result<Self> {
        if !rotation.is_rotation(1e-9) {
            return Err(Error::InvalidRotation {
                orthogonality_error: rotation.orthogonality_error(),
                det: rotation.det(),
            });
        }
        if !translation.is_finite() {
            return Err(invalid("extrinsic translation must be finite"));
        }
        Ok(Self {
            rotation,
            translation,
        })
    }

    /// Camera mounted at `(lateral, longitudinal, height)`, pitched down by
    /// `pitch` radians and turned left by `yaw` radians.
    pub fn from_mount(lateral: f64, longitudinal: f64, height: f64, pitch: f64, yaw: f64) -> Self {
        let rotation = Mat3::rot_z(yaw) * Mat3::rot_x(-pitch) * optical_to_robot_base();
        Self {
            rotation,
            translation: Vec3::new(lateral, longitudinal, height),
        }
    }

    /// `p_rob = R_ext · p_cam + t_ext`.
    pub fn cam_to_robot(&self, p_cam: Vec3) -> Vec3 {
        self.rotation * p_cam + self.translation
    }

    /// Robot-frame bearing of the optical axis projected onto the ground
    /// plane.
    pub fn optical_axis_bearing(&self) -> f64 {
        let axis = self.rotation.col(2);
        if axis.x == 0.0 && axis.y == 0.0 {
            FRAC_PI_2
        } else {
            math::atan2(axis.y, axis.x)
        }
    }
}

/// Cuboid body split at the drive center.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobotBody {
    pub l_front: f64,
    pub l_rear: f64,
    pub width: f64,
    pub height: f64,
}

impl RobotBody {
    pub fn new(l_front: f64, l_rear: f64, width: f64, height: f64) -> Result<Self> {
        if ![l_front, l_rear, width, height]
            .iter()
            .all(|v| v.is_finite() && *v > 0.0)
        {
            return Err(invalid("body dimensions must be strictly positive"));
        }
        Ok(Self {
            l_front,
            l_rear,
            width,
            height,
        })
    }

    pub fn half_width(&self) -> f64 {
        0.5 * self.width
    }

    /// Radius of the smallest drive-center circle containing the footprint.
    pub fn circumscribed_radius(&self) -> f64 {
        math::hypot(self.l_front.max(self.l_rear), self.half_width())
    }

    /// Footprint corners in the robot frame, counter-clockwise.
    pub fn corners(&self) -> [Vec2; 4] {
        let hw = self.half_width();
        [
            Vec2::new(hw, -self.l_rear),
            Vec2::new(hw, self.l_front),
            Vec2::new(-hw, self.l_front),
            Vec2::new(-hw, -self.l_rear),
        ]
    }
}

/// Velocity and acceleration limits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DynamicLimits {
    pub v_max: f64,
    pub omega_max: f64,
    pub a_v_max: f64,
    pub a_omega_max: f64,
}

impl DynamicLimits {
    pub fn new(v_max: f64, omega_max: f64, a_v_max: f64, a_omega_max: f64) -> Result<Self> {
        if ![v_max, omega_max, a_v_max, a_omega_max]
            .iter()
            .all(|v| v.is_finite() && *v > 0.0)
        {
            return Err(invalid("dynamic limits must be strictly positive"));
        }
        Ok(Self {
            v_max,
            omega_max,
            a_v_max,
            a_omega_max,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn intr() -> CameraIntrinsics {
        CameraIntrinsics::new(500.0, 500.0, 320.0, 240.0, 640, 480, Distortion::default()).unwrap()
    }

    #[test]
    fn backproject_principal_point_is_optical_axis() {
        let p = intr().backproject_pixel(320.0, 240.0, 3.0).unwrap();
        assert_eq!(p, Vec3::new(0.0, 0.0, 3.0));
        let p = intr().backproject_pixel(420.0, 240.0, 2.0).unwrap();
        assert_abs_diff_eq!(p.x, 0.4, epsilon = 1e-15);
        assert_eq!((p.y, p.z), (0.0, 2.0));
    }

    #[test]
    fn backproject_rejects_bad_depth() {
        for z in [0.0, -1.0, f64::NAN, f64::INFINITY] {
            assert!(matches!(
                intr().backproject_pixel(1.0, 1.0, z),
                Err(Error::InvalidDepth(_))
            ));
        }
    }

    #[test]
    fn project_examples() {
        let c = intr();
        assert_eq!(c.project_point(Vec3::new(0.0, 0.0, 1.0)).unwrap(), Vec2::new(320.0, 240.0));
        let px = c.project_point(Vec3::new(0.4, 0.0, 2.0)).unwrap();
        assert_abs_diff_eq!(px.x, 420.0, epsilon = 1e-12);
        assert!(matches!(
            c.project_point(Vec3::new(0.0, 0.0, -1.0)),
            Err(Error::BehindCamera(_))
        ));
    }

    #[test]
    fn project_backproject_round_trip() {
        let c = intr();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let u = rng.random_range(0.0..640.0);
            let v = rng.random_range(0.0..480.0);
            let z = rng.random_range(0.1..20.0);
            let px = c.project_point(c.backproject_pixel(u, v, z).unwrap()).unwrap();
            assert!((px.x - u).abs() <= 1e-9 && (px.y - v).abs() <= 1e-9);
        }
    }

    #[test]
    fn radial_term_matches_per_term_evaluation() {
        let mut c = intr();
        c.distortion.k1 = 0.1;
        let p = Vec3::new(0.3, -0.2, 1.5);
        let (x, y) = (p.x / p.z, p.y / p.z);
        let r2 = x * x + y * y;
        // Term by term: undistorted pixel plus the k1·r² displacement.
        let expected_u = 500.0 * x + 320.0 + 500.0 * x * 0.1 * r2;
        let expected_v = 500.0 * y + 240.0 + 500.0 * y * 0.1 * r2;
        let px = c.project_point(p).unwrap();
        assert_abs_diff_eq!(px.x, expected_u, epsilon = 1e-10);
        assert_abs_diff_eq!(px.y, expected_v, epsilon = 1e-10);
    }

    #[test]
    fn tangential_terms_match_per_term_evaluation() {
        let d = Distortion {
            p1: 0.01,
            p2: -0.02,
            ..Default::default()
        };
        let (x, y) = (0.2, 0.3);
        let r2 = x * x + y * y;
        let got = d.distort(Vec2::new(x, y));
        assert_abs_diff_eq!(got.x, x + 2.0 * 0.01 * x * y - 0.02 * (r2 + 2.0 * x * x), epsilon = 1e-15);
        assert_abs_diff_eq!(got.y, y + 0.01 * (r2 + 2.0 * y * y) + 2.0 * -0.02 * x * y, epsilon = 1e-15);
    }

    #[test]
    fn distortion_jacobian_matches_finite_differences() {
        let d = Distortion {
            k1: -0.2,
            k2: 0.05,
            p1: 0.001,
            p2: -0.002,
            k3: 0.01,
        };
        let p = Vec2::new(0.31, -0.17);
        let j = d.jacobian(p);
        let h = 1e-6;
        let fdx = (d.distort(Vec2::new(p.x + h, p.y)) - d.distort(Vec2::new(p.x - h, p.y))) * (0.5 / h);
        let fdy = (d.distort(Vec2::new(p.x, p.y + h)) - d.distort(Vec2::new(p.x, p.y - h))) * (0.5 / h);
        assert_abs_diff_eq!(j[0][0], fdx.x, epsilon = 1e-8);
        assert_abs_diff_eq!(j[1][0], fdx.y, epsilon = 1e-8);
        assert_abs_diff_eq!(j[0][1], fdy.x, epsilon = 1e-8);
        assert_abs_diff_eq!(j[1][1], fdy.y, epsilon = 1e-8);
    }

    #[test]
    fn undistort_examples() {
        let c = intr();
        assert_eq!(c.undistort_pixel(320.0, 240.0).unwrap(), Vec2::ZERO);
        let n = c.undistort_pixel(420.0, 240.0).unwrap();
        assert_abs_diff_eq!(n.x, 0.2, epsilon = 1e-15);
        assert_eq!(n.y, 0.0);
    }

    #[test]
    fn undistort_inverts_barrel_distortion_on_grid() {
        let mut c = intr();
        c.distortion.k1 = -0.2;
        for i in 0..20 {
            for j in 0..20 {
                let x = -0.6 + 1.2 * i as f64 / 19.0;
                let y = -0.45 + 0.9 * j as f64 / 19.0;
                let px = c.normalized_to_pixel(c.distortion.distort(Vec2::new(x, y)));
                let back = c.undistort_pixel(px.x, px.y).unwrap();
                assert!((back.x - x).abs() < 1e-9 && (back.y - y).abs() < 1e-9, "{x} {y}");
            }
        }
    }

    #[test]
    fn undistort_reports_non_convergence() {
        let mut c = intr();
        // Strong pincushion folds the model back on itself far off-axis.
        c.distortion.k1 = -2.0;
        let err = c.undistort_pixel(320.0 + 5000.0, 240.0).unwrap_err();
        assert!(matches!(err, Error::UndistortDiverged { .. }));
    }

    #[test]
    fn rodrigues_examples() {
        assert_eq!(rodrigues(Vec3::ZERO), Mat3::IDENTITY);
        let r = rodrigues(Vec3::new(0.0, 0.0, FRAC_PI_2));
        let y = r * Vec3::new(1.0, 0.0, 0.0);
        assert_abs_diff_eq!(y.x, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(y.y, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(y.z, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn rodrigues_round_trip_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for i in 0..100 {
            let dir = Vec3::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            );
            let dir = dir * (1.0 / dir.norm());
            // Include a few vectors right at the π boundary.
            let angle = if i < 5 {
                math::PI * (1.0 - 1e-7 * (i + 1) as f64)
            } else {
                rng.random_range(0.0..math::PI)
            };
            let r = dir * angle;
            let m = rodrigues(r);
            assert!(m.is_rotation(1e-9));
            let back = rodrigues_inv(&m).unwrap();
            assert!((back - r).norm() < 1e-10, "{r:?} -> {back:?}");
        }
    }

    #[test]
    fn rodrigues_inv_rejects_non_rotation() {
        let m = Mat3([[1.0, 0.1, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);
        assert!(matches!(rodrigues_inv(&m), Err(Error::InvalidRotation { .. })));
        let reflection = Mat3([[-1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);
        assert!(rodrigues_inv(&reflection).is_err());
    }

    #[test]
    fn cam_to_robot_examples() {
        let ident = CameraExtrinsics::new(Mat3::IDENTITY, Vec3::new(0.0, 0.0, 0.42)).unwrap();
        let p = ident.cam_to_robot(Vec3::new(0.0, 0.0, 2.0));
        assert_abs_diff_eq!(p.z, 2.42, epsilon = 1e-15);

        let level = CameraExtrinsics::from_mount(0.0, 0.0, 0.42, 0.0, 0.0);
        let p = level.cam_to_robot(Vec3::new(0.0, 0.0, 2.0));
        assert_eq!(p, Vec3::new(0.0, 2.0, 0.42));

        let base = CameraExtrinsics::new(optical_to_robot_base(), Vec3::ZERO).unwrap();
        assert_eq!(base.cam_to_robot(Vec3::new(1.0, 0.0, 0.0)), Vec3::new(1.0, 0.0, 0.0));
        // Image-down maps to robot-down.
        assert_eq!(base.cam_to_robot(Vec3::new(0.0, 1.0, 0.0)), Vec3::new(0.0, 0.0, -1.0));
    }

    #[test]
    fn pitched_camera_sees_ground_at_zero_height() {
        let pitch = 10f64.to_radians();
        let ext = CameraExtrinsics::from_mount(0.0, 0.03, 0.42, pitch, 0.0);
        // The optical axis meets the ground after 0.42 / sin(pitch) meters.
        let range = 0.42 / math::sin(pitch);
        let p = ext.cam_to_robot(Vec3::new(0.0, 0.0, range));
        assert_abs_diff_eq!(p.z, 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(p.y, 0.03 + range * math::cos(pitch), epsilon = 1e-9);
    }

    #[test]
    fn extrinsics_are_rotations_and_preserve_distances() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let ext = CameraExtrinsics::from_mount(
                rng.random_range(-0.2..0.2),
                rng.random_range(-0.2..0.2),
                rng.random_range(0.1..1.0),
                rng.random_range(-0.5..0.8),
                rng.random_range(-3.0..3.0),
            );
            assert!(ext.rotation.is_rotation(1e-9));
            let a = Vec3::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0), rng.random_range(0.1..5.0));
            let b = Vec3::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0), rng.random_range(0.1..5.0));
            let d0 = (a - b).norm();
            let d1 = (ext.cam_to_robot(a) - ext.cam_to_robot(b)).norm();
            assert!((d0 - d1).abs() <= 1e-12 * d0.max(1.0));
        }
    }

    #[test]
    fn yawed_camera_bearing_turns_left() {
        let ext = CameraExtrinsics::from_mount(0.0, 0.0, 0.4, 0.2, 0.5);
        assert_abs_diff_eq!(ext.optical_axis_bearing(), FRAC_PI_2 + 0.5, epsilon = 1e-12);
    }

    #[test]
    fn pose_transforms_follow_heading_convention() {
        let p = Pose2D::new(1.0, 2.0, FRAC_PI_2);
        let f = p.forward();
        assert_abs_diff_eq!(f.x, -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(f.y, 0.0, epsilon = 1e-15);
        let local = Vec2::new(0.3, -0.7);
        let back = p.inverse_transform_point(p.transform_point(local));
        assert_abs_diff_eq!(back.x, local.x, epsilon = 1e-15);
        assert_abs_diff_eq!(back.y, local.y, epsilon = 1e-15);
        assert_eq!(Pose2D::new(0.0, 0.0, 3.0 * math::PI).heading, math::PI);
    }

    #[test]
    fn integrate_matches_closed_form_arc() {
        // v = 0.5, ω = 0.5: circle of radius 1 centered one meter to the left.
        let mut pose = Pose2D::identity();
        for _ in 0..30 {
            pose = pose.integrate(0.5, 0.5, 0.1);
        }
        let phi = 0.5 * 3.0;
        let center = Vec2::new(-1.0, 0.0);
        let expected = center + Vec2::new(math::cos(phi), math::sin(phi));
        assert_abs_diff_eq!(pose.x, expected.x, epsilon = 1e-12);
        assert_abs_diff_eq!(pose.y, expected.y, epsilon = 1e-12);
        assert_abs_diff_eq!(pose.heading, phi, epsilon = 1e-12);
    }

    #[test]
    fn body_and_limits_validate() {
        assert!(RobotBody::new(0.2, 0.2, 0.5, 0.5).is_ok());
        assert!(RobotBody::new(0.2, 0.0, 0.5, 0.5).is_err());
        assert!(DynamicLimits::new(0.5, 1.0, 1.0, -1.0).is_err());
        let b = RobotBody::new(0.4, 0.2, 0.4, 0.5).unwrap();
        assert_abs_diff_eq!(b.circumscribed_radius(), math::hypot(0.4, 0.2), epsilon = 1e-15);
    }

    #[test]
    fn intrinsics_validation() {
        assert!(CameraIntrinsics::new(0.0, 1.0, 1.0, 1.0, 4, 4, Distortion::default()).is_err());
        assert!(CameraIntrinsics::new(1.0, 1.0, 4.0, 1.0, 4, 4, Distortion::default()).is_err());
        let c = CameraIntrinsics::from_hfov(320, 240, 75f64.to_radians()).unwrap();
        assert_abs_diff_eq!(c.cx, 159.5, epsilon = 1e-15);
        assert_abs_diff_eq!(c.fx, 160.0 / math::tan(37.5f64.to_radians()), epsilon = 1e-12);
    }
}
