//! Embodiment-aware visual local planning.
//!
//! Monocular relative depth is scale-corrected with a marker-based
//! calibration, converted into a height-filtered virtual laser scan in the
//! robot frame, and handed to a footprint-aware sampling planner. A small
//! ray-casting simulator and metric helpers close the loop for evaluation.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod calibration;
pub mod costmap;
pub mod depth;
pub mod embodiment;
pub mod error;
pub mod geometry;
pub mod math;
pub mod metrics;
pub mod planner;
pub mod pnp;
pub mod scan;
pub mod sim;
pub mod vln;

pub use error::{Error, Result};
pub use geometry::{
    CameraExtrinsics, CameraIntrinsics, Distortion, DynamicLimits, Mat3, Pose2D, RobotBody, Vec2,
    Vec3,
};
