//! Depth image to virtual 2D laser scan: back-projection into the robot
//! frame, height-band filtering and per-sector minimum range.

use alloc::vec;
use alloc::vec::Vec;

use crate::depth::{apply_scale_correction, DepthImage, DepthKind};
use crate::error::{invalid, Error, Result};
use crate::geometry::{CameraExtrinsics, CameraIntrinsics, Vec3};
use crate::math::{self, PI, TAU};

/// Points closer than this to the drive center have no usable bearing.
const MIN_POINT_RANGE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanConfig {
    /// Robot-frame bearing of the start of bin 0 (radians; forward is π/2).
    pub angle_min: f64,
    /// End of the last bin, exclusive.
    pub angle_max: f64,
    pub num_bins: usize,
    pub range_max: f64,
    /// Points must satisfy `h_min < z < h_max` to count as obstacles.
    pub h_min: f64,
    pub h_max: f64,
    /// Only every `pixel_stride`-th pixel in each direction is used.
    pub pixel_stride: usize,
}

impl ScanConfig {
    /// Full-circle scan at 0.5° resolution, 10 m range, band
    /// `(0.05, robot_height)`, pixel stride 2.
    pub fn for_robot_height(robot_height: f64) -> Self {
        Self {
            angle_min: -PI,
            angle_max: PI,
            num_bins: 720,
            range_max: 10.0,
            h_min: 0.05,
            h_max: robot_height,
            pixel_stride: 2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.angle_min < self.angle_max) || !(self.angle_max - self.angle_min <= TAU + 1e-12) {
            return Err(invalid("scan angles must satisfy angle_min < angle_max ≤ angle_min + 2π"));
        }
        if self.num_bins == 0 {
            return Err(invalid("scan needs at least one bin"));
        }
        if !(self.range_max > 0.0 && self.range_max.is_finite()) {
            return Err(invalid("range_max must be positive"));
        }
        if !(self.h_min >= 0.0 && self.h_min < self.h_max) {
            return Err(invalid("height band must satisfy 0 ≤ h_min < h_max"));
        }
        if self.pixel_stride == 0 {
            return Err(invalid("pixel stride must be at least 1"));
        }
        Ok(())
    }

    pub fn angle_increment(&self) -> f64 {
        (self.angle_max - self.angle_min) / self.num_bins as f64
    }

    pub fn bin_start(&self, k: usize) -> f64 {
        self.angle_min + k as f64 * self.angle_increment()
    }

    pub fn bin_center(&self, k: usize) -> f64 {
        self.angle_min + (k as f64 + 0.5) * self.angle_increment()
    }

    /// Bin whose half-open sector `[start_k, start_{k+1})` contains the
    /// bearing `theta`, taken modulo 2π.
    pub fn bin_of(&self, theta: f64) -> Option<usize> {
        if !theta.is_finite() {
            return None;
        }
        let offset = theta - self.angle_min;
        let mut t = self.angle_min + (offset - TAU * math::floor(offset / TAU));
        if t >= self.angle_min + TAU {
            t -= TAU;
        }
        if t >= self.angle_max {
            return None;
        }
        let step = self.angle_increment();
        let n = self.num_bins;
        let mut k = (math::floor((t - self.angle_min) / step) as usize).min(n - 1);
        // Keep the assignment consistent with `bin_start` under rounding.
        if k > 0 && self.bin_start(k) > t {
            k -= 1;
        } else if k + 1 < n && self.bin_start(k + 1) <= t {
            k += 1;
        }
        Some(k)
    }

    pub fn in_band(&self, z: f64) -> bool {
        self.h_min < z && z < self.h_max
    }
}

/// Per-sector minimum obstacle range.
#[derive(Debug, Clone, PartialEq)]
pub struct VirtualScan {
    pub ranges: Vec<f64>,
    pub config: ScanConfig,
}

impl VirtualScan {
    /// A scan with every bin at `range_max`.
    pub fn empty(config: ScanConfig) -> Self {
        Self {
            ranges: vec![config.range_max; config.num_bins],
            config,
        }
    }

    /// Wraps explicit ranges, checking they lie in `(0, range_max]`.
    pub fn from_ranges(config: ScanConfig, ranges: Vec<f64>) -> Result<Self> {
        config.validate()?;
        if ranges.len() != config.num_bins {
            return Err(Error::DimensionMismatch(alloc::format!(
                "{} ranges for {} bins",
                ranges.len(),
                config.num_bins
            )));
        }
        if let Some(r) = ranges.iter().find(|r| !(**r > 0.0 && **r <= config.range_max)) {
            return Err(invalid(alloc::format!(
                "scan range {r} outside (0, {}]",
                config.range_max
            )));
        }
        Ok(Self { ranges, config })
    }

    /// Lowers the bin containing robot-frame point `(x, y)` to its range.
    /// Returns the bin index if the point counted.
    pub fn insert_xy(&mut self, x: f64, y: f64) -> Option<usize> {
        let r = math::hypot(x, y);
        if !(r >= MIN_POINT_RANGE && r <= self.config.range_max) {
            return None;
        }
        let k = self.config.bin_of(math::atan2(y, x))?;
        if r < self.ranges[k] {
            self.ranges[k] = r;
        }
        Some(k)
    }

    /// Robot-frame endpoint of bin `k` at its center bearing.
    pub fn endpoint(&self, k: usize) -> crate::geometry::Vec2 {
        crate::geometry::Vec2::from_angle(self.config.bin_center(k)) * self.ranges[k]
    }
}

/// Bookkeeping for one scan conversion.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanDiagnostics {
    /// In-band points binned into each sector.
    pub points_per_bin: Vec<u32>,
    /// Sectors seen by at least one camera; the rest are unknown and hold
    /// `range_max`.
    pub covered: Vec<bool>,
}

impl ScanDiagnostics {
    pub fn new(num_bins: usize) -> Self {
        Self {
            points_per_bin: vec![0; num_bins],
            covered: vec![false; num_bins],
        }
    }

    pub fn unknown_bins(&self) -> usize {
        self.covered.iter().filter(|c| !**c).count()
    }
}

fn stride_grid(width: usize, height: usize, stride: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..height)
        .step_by(stride)
        .flat_map(move |v| (0..width).step_by(stride).map(move |u| (u, v)))
}

/// Back-projects every valid pixel on the stride grid into the robot frame.
pub fn depth_to_cloud(
    depth: &DepthImage,
    intr: &CameraIntrinsics,
    ext: &CameraExtrinsics,
    stride: usize,
) -> Result<Vec<Vec3>> {
    depth.require(DepthKind::Metric)?;
    if stride == 0 {
        return Err(invalid("pixel stride must be at least 1"));
    }
    let mut cloud = Vec::new();
    for (u, v) in stride_grid(depth.width(), depth.height(), stride) {
        if let Some(z) = depth.get(u, v) {
            let p = intr.backproject_pixel(u as f64, v as f64, z)?;
            cloud.push(ext.cam_to_robot(p));
        }
    }
    Ok(cloud)
}

/// Keeps points strictly inside the height band.
pub fn height_filter(cloud: &[Vec3], h_min: f64, h_max: f64) -> Vec<Vec3> {
    cloud
        .iter()
        .copied()
        .filter(|p| h_min < p.z && p.z < h_max)
        .collect()
}

/// Minimum range per sector; bins with no point stay at `range_max`.
pub fn project_to_scan(cloud: &[Vec3], cfg: &ScanConfig) -> Result<VirtualScan> {
    Ok(project_with_diagnostics(cloud, cfg)?.0)
}

pub fn project_with_diagnostics(
    cloud: &[Vec3],
    cfg: &ScanConfig,
) -> Result<(VirtualScan, ScanDiagnostics)> {
    cfg.validate()?;
    let mut scan = VirtualScan::empty(*cfg);
    let mut diag = ScanDiagnostics::new(cfg.num_bins);
    for p in cloud {
        if let Some(k) = scan.insert_xy(p.x, p.y) {
            diag.points_per_bin[k] += 1;
        }
    }
    Ok((scan, diag))
}

/// Sectors whose bearing is hit by at least one sampled pixel ray.
pub fn camera_coverage(
    intr: &CameraIntrinsics,
    ext: &CameraExtrinsics,
    cfg: &ScanConfig,
) -> Result<Vec<bool>> {
    cfg.validate()?;
    let mut covered = vec![false; cfg.num_bins];
    let stride = cfg.pixel_stride;
    for (u, v) in stride_grid(intr.width, intr.height, stride) {
        let ray = intr.backproject_pixel(u as f64, v as f64, 1.0)?;
        let d = ext.rotation * ray;
        if d.x == 0.0 && d.y == 0.0 {
            continue;
        }
        if let Some(k) = cfg.bin_of(math::atan2(d.y, d.x)) {
            covered[k] = true;
        }
    }
    Ok(covered)
}

/// Converts one metric depth image straight into a scan without
/// materializing the point cloud.
pub fn metric_depth_to_scan(
    depth: &DepthImage,
    intr: &CameraIntrinsics,
    ext: &CameraExtrinsics,
    cfg: &ScanConfig,
) -> Result<(VirtualScan, ScanDiagnostics)> {
    depth.require(DepthKind::Metric)?;
    cfg.validate()?;
    let mut scan = VirtualScan::empty(*cfg);
    let mut diag = ScanDiagnostics::new(cfg.num_bins);
    diag.covered = camera_coverage(intr, ext, cfg)?;
    for (u, v) in stride_grid(depth.width(), depth.height(), cfg.pixel_stride) {
        let Some(z) = depth.get(u, v) else { continue };
        let p = ext.cam_to_robot(intr.backproject_pixel(u as f64, v as f64, z)?);
        if cfg.in_band(p.z) {
            if let Some(k) = scan.insert_xy(p.x, p.y) {
                diag.points_per_bin[k] += 1;
            }
        }
    }
    Ok((scan, diag))
}

/// Element-wise minimum of scans sharing one configuration.
pub fn merge_scans(scans: &[VirtualScan]) -> Result<VirtualScan> {
    let (first, rest) = scans
        .split_first()
        .ok_or_else(|| invalid("nothing to merge"))?;
    let mut out = first.clone();
    for s in rest {
        if s.config != first.config {
            return Err(Error::ScanConfigMismatch);
        }
        for (a, b) in out.ranges.iter_mut().zip(&s.ranges) {
            *a = a.min(*b);
        }
    }
    Ok(out)
}

/// Scale-corrects a relative depth image and converts it to a scan:
/// correction, back-projection, height filtering, sector minimum.
pub fn visual_to_scan(
    d_rel: &DepthImage,
    s1: f64,
    s2: f64,
    intr: &CameraIntrinsics,
    ext: &CameraExtrinsics,
    cfg: &ScanConfig,
) -> Result<VirtualScan> {
    let metric = apply_scale_correction(d_rel, s1, s2)?;
    let cloud = depth_to_cloud(&metric, intr, ext, cfg.pixel_stride)?;
    let obstacles = height_filter(&cloud, cfg.h_min, cfg.h_max);
    project_to_scan(&obstacles, cfg)
}
