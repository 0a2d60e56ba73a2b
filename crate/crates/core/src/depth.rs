//! Depth images, the synthetic relative-depth source, scale correction and
//! depth-error evaluation.

use alloc::vec;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::math;

/// What the scalar field of a [`DepthImage`] means.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DepthKind {
    /// Affine-ambiguous inverse depth, as produced by a monocular model.
    RelativeInverse,
    /// Perpendicular (camera-frame `z`) depth in meters.
    Metric,
}

impl DepthKind {
    fn name(self) -> &'static str {
        match self {
            DepthKind::RelativeInverse => "relative-inverse",
            DepthKind::Metric => "metric",
        }
    }
}

/// Row-major scalar image with a validity mask.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthImage {
    width: usize,
    height: usize,
    data: Vec<f64>,
    valid: Vec<bool>,
    kind: DepthKind,
}

/// A value read from a depth image at a sub-pixel location.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DepthSample {
    pub value: f64,
    /// Set when a neighbor was invalid and the nearest valid pixel was used
    /// instead of bilinear interpolation.
    pub fallback: bool,
}

impl DepthImage {
    /// An image with every pixel invalid.
    pub fn new(width: usize, height: usize, kind: DepthKind) -> Self {
        let n = width * height;
        Self {
            width,
            height,
            data: vec![f64::NAN; n],
            valid: vec![false; n],
            kind,
        }
    }

    /// Wraps row-major data. Non-finite values, and non-positive values of a
    /// metric image, are marked invalid.
    pub fn from_data(width: usize, height: usize, data: Vec<f64>, kind: DepthKind) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::DimensionMismatch(alloc::format!(
                "{} values for a {width}x{height} image",
                data.len()
            )));
        }
        let valid = data.iter().map(|&v| Self::acceptable(kind, v)).collect();
        Ok(Self {
            width,
            height,
            data,
            valid,
            kind,
        })
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        kind: DepthKind,
        mut f: impl FnMut(usize, usize) -> Option<f64>,
    ) -> Self {
        let mut img = Self::new(width, height, kind);
        for v in 0..height {
            for u in 0..width {
                if let Some(value) = f(u, v) {
                    img.set(u, v, value);
                }
            }
        }
        img
    }

    fn acceptable(kind: DepthKind, value: f64) -> bool {
        value.is_finite() && (kind == DepthKind::RelativeInverse || value > 0.0)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn kind(&self) -> DepthKind {
        self.kind
    }

    /// Raw row-major values; invalid pixels hold NaN.
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|v| **v).count()
    }

    pub fn get(&self, u: usize, v: usize) -> Option<f64> {
        if u >= self.width || v >= self.height {
            return None;
        }
        let i = v * self.width + u;
        self.valid[i].then_some(self.data[i])
    }

    /// Stores `value`; values that violate the image kind mark the pixel
    /// invalid instead.
    pub fn set(&mut self, u: usize, v: usize, value: f64) {
        let i = v * self.width + u;
        if Self::acceptable(self.kind, value) {
            self.data[i] = value;
            self.valid[i] = true;
        } else {
            self.invalidate(u, v);
        }
    }

    pub fn invalidate(&mut self, u: usize, v: usize) {
        let i = v * self.width + u;
        self.data[i] = f64::NAN;
        self.valid[i] = false;
    }

    pub(crate) fn require(&self, kind: DepthKind) -> Result<()> {
        if self.kind == kind {
            Ok(())
        } else {
            Err(Error::WrongDepthKind {
                expected: kind.name(),
            })
        }
    }

    /// Bilinear interpolation at a sub-pixel location at least one pixel
    /// away from the border.
    ///
    /// If any of the four neighbors is invalid, the nearest valid neighbor is
    /// returned with [`DepthSample::fallback`] set.
    pub fn sample_bilinear(&self, u: f64, v: f64) -> Result<DepthSample> {
        let max_u = self.width as f64 - 2.0;
        let max_v = self.height as f64 - 2.0;
        if !(u >= 1.0 && u <= max_u && v >= 1.0 && v <= max_v) {
            return Err(Error::OutOfBounds { u, v });
        }
        let u0 = math::floor(u) as usize;
        let v0 = math::floor(v) as usize;
        let (fu, fv) = (u - u0 as f64, v - v0 as f64);
        let neighbors = [(u0, v0), (u0 + 1, v0), (u0, v0 + 1), (u0 + 1, v0 + 1)];
        let values = neighbors.map(|(nu, nv)| self.get(nu, nv));
        if let [Some(a), Some(b), Some(c), Some(d)] = values {
            let top = a + (b - a) * fu;
            let bottom = c + (d - c) * fu;
            return Ok(DepthSample {
                value: top + (bottom - top) * fv,
                fallback: false,
            });
        }
        let mut best: Option<(f64, f64)> = None;
        for ((nu, nv), value) in neighbors.iter().zip(values) {
            if let Some(value) = value {
                let (du, dv) = (*nu as f64 - u, *nv as f64 - v);
                let d2 = du * du + dv * dv;
                if best.is_none_or(|(bd, _)| d2 < bd) {
                    best = Some((d2, value));
                }
            }
        }
        match best {
            Some((_, value)) => Ok(DepthSample {
                value,
                fallback: true,
            }),
            None => Err(Error::InvalidSample { u, v }),
        }
    }

    /// Applies `f` to every valid pixel, producing an image of `kind`.
    pub fn map_valid(&self, kind: DepthKind, mut f: impl FnMut(f64) -> Option<f64>) -> DepthImage {
        let mut out = DepthImage::new(self.width, self.height, kind);
        for i in 0..self.data.len() {
            if self.valid[i] {
                if let Some(value) = f(self.data[i]) {
                    if Self::acceptable(kind, value) {
                        out.data[i] = value;
                        out.valid[i] = true;
                    }
                }
            }
        }
        out
    }
}

/// Ground-truth affine disparity distortion used to synthesize relative
/// depth from metric depth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DisparityDistortion {
    pub s1: f64,
    pub s2: f64,
    /// Standard deviation of the multiplicative per-pixel noise.
    pub noise_sigma: f64,
    pub seed: u64,
}

impl DisparityDistortion {
    pub fn new(s1: f64, s2: f64, noise_sigma: f64, seed: u64) -> Result<Self> {
        if !(s1 > 0.0 && s1.is_finite()) || !s2.is_finite() {
            return Err(crate::error::invalid("s1 must be positive and s2 finite"));
        }
        if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
            return Err(crate::error::invalid("noise sigma must be non-negative"));
        }
        Ok(Self {
            s1,
            s2,
            noise_sigma,
            seed,
        })
    }
}

/// Relative inverse depth `((1/Z) − s2) / s1 · (1 + σ·ξ)` with `ξ` drawn from
/// a standard normal stream seeded by `d.seed`, one draw per pixel in
/// row-major order.
pub fn distort_to_relative(z: &DepthImage, d: &DisparityDistortion) -> Result<DepthImage> {
    z.require(DepthKind::Metric)?;
    let mut rng = ChaCha8Rng::seed_from_u64(d.seed);
    let mut out = DepthImage::new(z.width, z.height, DepthKind::RelativeInverse);
    for i in 0..z.data.len() {
        let xi: f64 = if d.noise_sigma > 0.0 {
            StandardNormal.sample(&mut rng)
        } else {
            0.0
        };
        if z.valid[i] {
            let rel = (1.0 / z.data[i] - d.s2) / d.s1;
            out.data[i] = rel * (1.0 + d.noise_sigma * xi);
            out.valid[i] = true;
        }
    }
    Ok(out)
}

/// Smallest admissible corrected disparity (1/m).
pub const MIN_DISPARITY_DENOMINATOR: f64 = 1e-6;

/// Metric depth `1 / (s1·D_rel + s2)`; pixels whose denominator is at most
/// [`MIN_DISPARITY_DENOMINATOR`] become invalid.
pub fn apply_scale_correction(d_rel: &DepthImage, s1: f64, s2: f64) -> Result<DepthImage> {
    d_rel.require(DepthKind::RelativeInverse)?;
    Ok(d_rel.map_valid(DepthKind::Metric, |rel| {
        let den = s1 * rel + s2;
        (den > MIN_DISPARITY_DENOMINATOR).then(|| 1.0 / den)
    }))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DepthError {
    pub mae: f64,
    pub rmse: f64,
    /// Number of pixels valid in both images.
    pub count: usize,
}

/// Mean absolute and root-mean-square error over jointly valid pixels.
pub fn eval_depth(pred: &DepthImage, gt: &DepthImage) -> Result<DepthError> {
    pred.require(DepthKind::Metric)?;
    gt.require(DepthKind::Metric)?;
    if pred.width != gt.width || pred.height != gt.height {
        return Err(Error::DimensionMismatch(alloc::format!(
            "prediction is {}x{}, ground truth is {}x{}",
            pred.width,
            pred.height,
            gt.width,
            gt.height
        )));
    }
    let (mut abs, mut sq, mut count) = (0.0, 0.0, 0usize);
    for i in 0..pred.data.len() {
        if pred.valid[i] && gt.valid[i] {
            let e = pred.data[i] - gt.data[i];
            abs += e.abs();
            sq += e * e;
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::EmptyEvaluation);
    }
    let n = count as f64;
    Ok(DepthError {
        mae: abs / n,
        rmse: math::sqrt(sq / n),
        count,
    })
}
