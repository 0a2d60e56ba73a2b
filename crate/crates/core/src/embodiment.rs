//! Robot platforms: body, dynamic limits and camera rig.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Result};
use crate::geometry::{CameraExtrinsics, CameraIntrinsics, DynamicLimits, RobotBody};
use crate::math::PI;

/// Disparity-domain scale parameters of one camera.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleParams {
    pub s1: f64,
    pub s2: f64,
}

impl ScaleParams {
    pub const IDENTITY: ScaleParams = ScaleParams { s1: 1.0, s2: 0.0 };
}

#[derive(Debug, Clone, PartialEq)]
pub struct CameraRig {
    pub name: String,
    pub intrinsics: CameraIntrinsics,
    pub extrinsics: CameraExtrinsics,
    /// Calibration used to correct this camera's relative depth.
    pub scale: Option<ScaleParams>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbodimentProfile {
    pub name: String,
    pub body: RobotBody,
    pub limits: DynamicLimits,
    pub cameras: Vec<CameraRig>,
}

/// Image size used by the preset camera rigs.
pub const PRESET_IMAGE: (usize, usize) = (320, 240);
/// Horizontal field of view of a single forward camera.
pub const FRONT_CAMERA_FOV: f64 = 75.0 * PI / 180.0;

fn camera(name: &str, hfov: f64, lateral: f64, longitudinal: f64, height: f64, yaw: f64) -> CameraRig {
    let (w, h) = PRESET_IMAGE;
    CameraRig {
        name: name.to_string(),
        intrinsics: CameraIntrinsics::from_hfov(w, h, hfov).expect("preset field of view is valid"),
        extrinsics: CameraExtrinsics::from_mount(lateral, longitudinal, height, 0.0, yaw),
        scale: None,
    }
}

/// Three 120° cameras facing forward, rear-left and rear-right.
fn ring(height: f64, offset: f64) -> Vec<CameraRig> {
    let fov = 120.0 * PI / 180.0;
    vec![
        camera("front", fov, 0.0, offset, height, 0.0),
        camera("left", fov, 0.0, offset, height, 2.0 * PI / 3.0),
        camera("right", fov, 0.0, offset, height, -2.0 * PI / 3.0),
    ]
}

impl EmbodimentProfile {
    pub fn validate(&self) -> Result<()> {
        RobotBody::new(self.body.l_front, self.body.l_rear, self.body.width, self.body.height)?;
        DynamicLimits::new(
            self.limits.v_max,
            self.limits.omega_max,
            self.limits.a_v_max,
            self.limits.a_omega_max,
        )?;
        for cam in &self.cameras {
            cam.intrinsics.validate()?;
            CameraExtrinsics::new(cam.extrinsics.rotation, cam.extrinsics.translation)?;
            if let Some(s) = cam.scale {
                if !(s.s1.is_finite() && s.s2.is_finite()) {
                    return Err(invalid("camera scale parameters must be finite"));
                }
            }
        }
        Ok(())
    }

    /// Built-in platforms: `sim` (the simulated benchmark robot with one
    /// forward camera) and `dmr1` … `dmr7`.
    pub fn preset(name: &str) -> Option<Self> {
        let lim = |v_max: f64| DynamicLimits {
            v_max,
            omega_max: PI / 2.0,
            a_v_max: 3.0,
            a_omega_max: 3.0,
        };
        let body = |f: f64, r: f64, w: f64, h: f64| RobotBody {
            l_front: f,
            l_rear: r,
            width: w,
            height: h,
        };
        let front = |height: f64, offset: f64| vec![camera("front", FRONT_CAMERA_FOV, 0.0, offset, height, 0.0)];
        let (b, l, cams) = match name {
            "sim" => (body(0.21, 0.21, 0.5, 0.5), lim(0.5), front(0.42, 0.03)),
            "dmr1" => (body(0.20, 0.20, 0.40, 0.5), lim(0.5), ring(0.42, 0.03)),
            "dmr2" => (body(0.15, 0.45, 0.40, 0.5), lim(0.5), ring(0.42, 0.03)),
            "dmr3" => (body(0.40, 0.20, 0.40, 0.5), lim(0.5), ring(0.42, 0.03)),
            "dmr4" => (body(0.20, 0.20, 1.00, 0.5), lim(0.5), ring(0.42, 0.03)),
            "dmr5" => (body(0.18, 0.20, 0.40, 0.6), lim(0.5), ring(0.52, -0.13)),
            "dmr6" => (body(0.20, 0.20, 0.40, 0.5), lim(0.5), front(0.20, 0.15)),
            "dmr7" => (body(0.35, 0.35, 0.30, 0.65), lim(0.6), front(0.60, 0.0)),
            _ => return None,
        };
        Some(Self {
            name: name.to_string(),
            body: b,
            limits: l,
            cameras: cams,
        })
    }

    pub fn preset_names() -> &'static [&'static str] {
        &["sim", "dmr1", "dmr2", "dmr3", "dmr4", "dmr5", "dmr6", "dmr7"]
    }
}
