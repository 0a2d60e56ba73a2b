//! Turning left/center/right region confidences from a language-grounded
//! scorer into waypoint commands for the local planner.

use crate::error::{invalid, Result};
use crate::geometry::{Pose2D, Vec2};
use crate::math::{self, FRAC_PI_2, PI};

/// Confidence above which the robot heads for the best region.
pub const DIRECTION_THRESHOLD: f64 = 0.65;
/// Confidence above which the robot takes short, careful steps.
pub const NEAR_THRESHOLD: f64 = 0.80;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    Left,
    Center,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionConfidence {
    pub left: f64,
    pub center: f64,
    pub right: f64,
    /// Bearing offsets of the region centers from straight ahead; positive
    /// is to the left.
    pub phi_left: f64,
    pub phi_right: f64,
}

impl RegionConfidence {
    /// Regions at ±25°, a 75° view split into thirds.
    pub fn new(left: f64, center: f64, right: f64) -> Result<Self> {
        Self::with_angles(left, center, right, 25.0 * PI / 180.0, -25.0 * PI / 180.0)
    }

    pub fn with_angles(left: f64, center: f64, right: f64, phi_left: f64, phi_right: f64) -> Result<Self> {
        if ![left, center, right].iter().all(|s| (0.0..=1.0).contains(s)) {
            return Err(invalid("region scores must lie in [0, 1]"));
        }
        if !(phi_left > 0.0 && phi_right < 0.0) {
            return Err(invalid("left region must be at a positive angle, right at a negative one"));
        }
        Ok(Self {
            left,
            center,
            right,
            phi_left,
            phi_right,
        })
    }

    /// Best region and its score; ties favor the center, then the left.
    pub fn best(&self) -> (Region, f64) {
        let mut best = (Region::Center, self.center);
        for (r, s) in [(Region::Left, self.left), (Region::Right, self.right)] {
            if s > best.1 {
                best = (r, s);
            }
        }
        best
    }

    pub fn angle(&self, r: Region) -> f64 {
        match r {
            Region::Left => self.phi_left,
            Region::Center => 0.0,
            Region::Right => self.phi_right,
        }
    }
}

/// Waypoint relative to the robot at the time it was issued.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HighLevelCommand {
    pub distance: f64,
    /// Offset from straight ahead, positive to the left.
    pub theta: f64,
}

pub fn command_from_confidence(rc: &RegionConfidence) -> HighLevelCommand {
    let (region, s) = rc.best();
    let theta = if s > DIRECTION_THRESHOLD { rc.angle(region) } else { 0.0 };
    let distance = if s > NEAR_THRESHOLD {
        1.0 + 0.3 * s
    } else if s > DIRECTION_THRESHOLD {
        2.0 + 0.5 * s
    } else {
        3.0
    };
    HighLevelCommand { distance, theta }
}

/// World-frame waypoint `distance` meters from the robot along bearing
/// `heading + theta`.
pub fn to_world(cmd: &HighLevelCommand, pose: &Pose2D) -> Vec2 {
    let bearing = FRAC_PI_2 + cmd.theta;
    let local = Vec2::new(cmd.distance * math::cos(bearing), cmd.distance * math::sin(bearing));
    pose.transform_point(local)
}

/// Declares arrival after enough consecutive confident center frames.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrivalDetector {
    pub count: u32,
    pub required: u32,
    pub threshold: f64,
}

impl Default for ArrivalDetector {
    fn default() -> Self {
        Self {
            count: 0,
            required: 5,
            threshold: NEAR_THRESHOLD,
        }
    }
}

impl ArrivalDetector {
    pub fn new(required: u32, threshold: f64) -> Self {
        Self {
            count: 0,
            required,
            threshold,
        }
    }

    /// Feeds one frame; returns whether the destination counts as reached.
    pub fn update(&mut self, rc: &RegionConfidence) -> bool {
        let (region, s) = rc.best();
        if region == Region::Center && s > self.threshold {
            self.count += 1;
        } else {
            self.count = 0;
        }
        self.count >= self.required
    }
}
