//! Offline recovery of the affine disparity parameters `(s1, s2)` relating a
//! relative inverse-depth model to metric inverse depth, from markers of
//! known size.

use alloc::vec::Vec;

use crate::depth::{DepthImage, DepthKind};
use crate::error::{invalid, Error, Result};
use crate::geometry::CameraIntrinsics;
use crate::math;
use crate::pnp::{corner_depths, estimate_marker_pose, MarkerObservation};

pub const DEFAULT_LAMBDA: f64 = 1e-6;
/// Below this max/min depth ratio the samples lack near/far coverage.
pub const MIN_DEPTH_SPREAD: f64 = 2.0;
/// Condition number of the regularized normal matrix above which a warning
/// is raised.
pub const CONDITION_WARNING: f64 = 1e4;
const SINGULAR_RATIO: f64 = 1e-12;

/// One row of the calibration system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationSample {
    /// Relative inverse depth read at the corner.
    pub d_pred: f64,
    /// Metric corner depth from the marker pose.
    pub z_real: f64,
}

/// Solution of the 2×2 ridge system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RidgeSolution {
    pub x: [f64; 2],
    pub condition_number: f64,
}

/// Minimizes `‖A·x − b‖² + λ‖x‖²` in closed form for a two-column `A`.
pub fn solve_ridge(a: &[[f64; 2]], b: &[f64], lambda: f64) -> Result<RidgeSolution> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch(alloc::format!(
            "{} rows but {} targets",
            a.len(),
            b.len()
        )));
    }
    if a.len() < 2 {
        return Err(invalid("ridge regression needs at least two rows"));
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(invalid("lambda must be finite and non-negative"));
    }
    let (mut m00, mut m01, mut m11, mut r0, mut r1) = (lambda, 0.0, lambda, 0.0, 0.0);
    for (row, y) in a.iter().zip(b) {
        m00 += row[0] * row[0];
        m01 += row[0] * row[1];
        m11 += row[1] * row[1];
        r0 += row[0] * y;
        r1 += row[1] * y;
    }
    let half_trace = 0.5 * (m00 + m11);
    let radius = math::hypot(0.5 * (m00 - m11), m01);
    let eig_max = half_trace + radius;
    let eig_min = half_trace - radius;
    if !(eig_max > 0.0) || !(eig_min > SINGULAR_RATIO * eig_max) {
        return Err(Error::IllConditioned {
            condition_number: if eig_min > 0.0 {
                eig_max / eig_min
            } else {
                f64::INFINITY
            },
        });
    }
    let det = m00 * m11 - m01 * m01;
    Ok(RidgeSolution {
        x: [(m11 * r0 - m01 * r1) / det, (m00 * r1 - m01 * r0) / det],
        condition_number: eig_max / eig_min,
    })
}

/// A relative depth image and the markers annotated in it.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationImage {
    pub depth: DepthImage,
    pub markers: Vec<MarkerObservation>,
}

/// Non-fatal issues found while calibrating.
#[derive(Debug, Clone, PartialEq)]
pub enum CalibrationWarning {
    /// Sample depths do not span a near and a far distance.
    NarrowDepthSpread { ratio: f64 },
    IllConditioned { condition_number: f64 },
    NonPositiveScale { s1: f64 },
    /// A marker could not be used at all.
    MarkerSkipped { image: usize, marker: usize, reason: Error },
    /// A corner could not be sampled from the depth image.
    SampleSkipped { image: usize, marker: usize, corner: usize, reason: Error },
    /// A corner was sampled from its nearest valid pixel.
    SampleFallback { image: usize, marker: usize, corner: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationResult {
    pub s1: f64,
    pub s2: f64,
    pub lambda: f64,
    /// RMS of the fitted residual in inverse depth (1/m).
    pub residual_rms: f64,
    pub depth_spread_ratio: f64,
    pub condition_number: f64,
    pub sample_count: usize,
    pub samples: Vec<CalibrationSample>,
    pub warnings: Vec<CalibrationWarning>,
}

/// Solves for `(s1, s2)` from explicit samples.
pub fn calibrate_samples(samples: &[CalibrationSample], lambda: f64) -> Result<CalibrationResult> {
    if samples.is_empty() {
        return Err(Error::EmptyCalibration);
    }
    if let Some(bad) = samples
        .iter()
        .find(|s| !(s.z_real > 0.0 && s.z_real.is_finite() && s.d_pred.is_finite()))
    {
        return Err(invalid(alloc::format!(
            "calibration sample d_pred = {}, z_real = {} is not usable",
            bad.d_pred,
            bad.z_real
        )));
    }
    let a: Vec<[f64; 2]> = samples.iter().map(|s| [s.d_pred, 1.0]).collect();
    let b: Vec<f64> = samples.iter().map(|s| 1.0 / s.z_real).collect();
    let sol = solve_ridge(&a, &b, lambda)?;
    let [s1, s2] = sol.x;
    let sq: f64 = a
        .iter()
        .zip(&b)
        .map(|(row, y)| {
            let e = row[0] * s1 + row[1] * s2 - y;
            e * e
        })
        .sum();
    let (zmin, zmax) = samples.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), s| {
        (lo.min(s.z_real), hi.max(s.z_real))
    });
    let ratio = zmax / zmin;
    let mut warnings = Vec::new();
    if ratio < MIN_DEPTH_SPREAD {
        warnings.push(CalibrationWarning::NarrowDepthSpread { ratio });
    }
    if sol.condition_number > CONDITION_WARNING {
        warnings.push(CalibrationWarning::IllConditioned {
            condition_number: sol.condition_number,
        });
    }
    if !(s1 > 0.0) {
        warnings.push(CalibrationWarning::NonPositiveScale { s1 });
    }
    Ok(CalibrationResult {
        s1,
        s2,
        lambda,
        residual_rms: math::sqrt(sq / samples.len() as f64),
        depth_spread_ratio: ratio,
        condition_number: sol.condition_number,
        sample_count: samples.len(),
        samples: samples.to_vec(),
        warnings,
    })
}

/// Marker-based calibration over a set of relative depth images.
///
/// Each marker pose is estimated from its raw corners; every corner then
/// contributes the row `[D_rel(corner), 1] · [s1, s2]ᵀ = 1 / z_corner`, with
/// `D_rel` read at the undistorted corner location because depth images are
/// rectified.
pub fn calibrate(
    images: &[CalibrationImage],
    intr: &CameraIntrinsics,
    lambda: f64,
) -> Result<CalibrationResult> {
    if images.is_empty() {
        return Err(Error::EmptyCalibration);
    }
    let mut samples = Vec::new();
    let mut warnings = Vec::new();
    for (ii, img) in images.iter().enumerate() {
        img.depth.require(DepthKind::RelativeInverse)?;
        for (mi, obs) in img.markers.iter().enumerate() {
            let depths = match estimate_marker_pose(intr, obs)
                .and_then(|pose| corner_depths(&pose, obs.size))
            {
                Ok(d) => d,
                Err(reason) => {
                    warnings.push(CalibrationWarning::MarkerSkipped {
                        image: ii,
                        marker: mi,
                        reason,
                    });
                    continue;
                }
            };
            for (ci, (corner, z_real)) in obs.corners.iter().zip(depths).enumerate() {
                let sampled = intr
                    .rectify_pixel(corner.x, corner.y)
                    .and_then(|px| img.depth.sample_bilinear(px.x, px.y));
                match sampled {
                    Ok(s) => {
                        if s.fallback {
                            warnings.push(CalibrationWarning::SampleFallback {
                                image: ii,
                                marker: mi,
                                corner: ci,
                            });
                        }
                        samples.push(CalibrationSample {
                            d_pred: s.value,
                            z_real,
                        });
                    }
                    Err(reason) => warnings.push(CalibrationWarning::SampleSkipped {
                        image: ii,
                        marker: mi,
                        corner: ci,
                        reason,
                    }),
                }
            }
        }
    }
    let mut result = calibrate_samples(&samples, lambda)?;
    warnings.append(&mut result.warnings);
    result.warnings = warnings;
    Ok(result)
}
