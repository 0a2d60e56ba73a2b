//! Footprint-aware reactive planning on virtual scans.
//!
//! [`SamplingPlanner`] evaluates a grid of constant-twist commands inside
//! the dynamic window, rejects any whose rollout brings a scan point within
//! the safety margin of the robot's rectangular footprint, and scores the
//! rest by goal progress, clearance and speed.

use alloc::vec::Vec;

use crate::costmap::CostField;
use crate::error::{invalid, Error, Result};
use crate::geometry::{DynamicLimits, Pose2D, RobotBody, Vec2};
use crate::math::{self, FRAC_PI_2};
use crate::scan::VirtualScan;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct VelocityCommand {
    pub v: f64,
    pub omega: f64,
}

impl VelocityCommand {
    pub const STOP: VelocityCommand = VelocityCommand { v: 0.0, omega: 0.0 };

    pub fn new(v: f64, omega: f64) -> Self {
        Self { v, omega }
    }
}

/// Everything a policy sees at one control step.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub scan: VirtualScan,
    /// Goal position in the robot frame.
    pub goal: Vec2,
    /// Current velocity.
    pub velocity: VelocityCommand,
    pub limits: DynamicLimits,
    pub body: RobotBody,
}

/// Maps observations to velocity commands.
pub trait Policy {
    fn act(&self, obs: &Observation) -> VelocityCommand;
}

/// Dimension-aware encoding of one scan point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointFeature {
    pub sin_phi: f64,
    pub cos_phi: f64,
    /// `1 / (d − β)`.
    pub inv_gap: f64,
    pub l_front: f64,
    pub l_rear: f64,
    pub half_width: f64,
}

/// One feature per scan bin, at the bin-center bearing.
pub fn encode_point_features(
    scan: &VirtualScan,
    body: &RobotBody,
    beta: f64,
) -> Result<Vec<PointFeature>> {
    scan.ranges
        .iter()
        .enumerate()
        .map(|(k, &d)| {
            if !(d > beta) {
                return Err(Error::Encoding { bin: k, range: d, beta });
            }
            let phi = scan.config.bin_center(k);
            Ok(PointFeature {
                sin_phi: math::sin(phi),
                cos_phi: math::cos(phi),
                inv_gap: 1.0 / (d - beta),
                l_front: body.l_front,
                l_rear: body.l_rear,
                half_width: body.half_width(),
            })
        })
        .collect()
}

/// Signed distance from robot-frame point `p` to the footprint rectangle:
/// negative inside, positive outside.
pub fn footprint_clearance(p: Vec2, body: &RobotBody) -> f64 {
    let hw = body.half_width();
    // Distances past each pair of faces (positive = outside).
    let dx = p.x.abs() - hw;
    let dy = (p.y - body.l_front).max(-body.l_rear - p.y);
    if dx <= 0.0 && dy <= 0.0 {
        dx.max(dy)
    } else {
        let (ox, oy) = (dx.max(0.0), dy.max(0.0));
        math::sqrt(ox * ox + oy * oy)
    }
}

/// Box of velocities reachable within one control period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VelocityWindow {
    pub v_min: f64,
    pub v_max: f64,
    pub omega_min: f64,
    pub omega_max: f64,
}

impl VelocityWindow {
    pub fn contains(&self, cmd: VelocityCommand) -> bool {
        cmd.v >= self.v_min && cmd.v <= self.v_max && cmd.omega >= self.omega_min && cmd.omega <= self.omega_max
    }

    pub fn clamp(&self, cmd: VelocityCommand) -> VelocityCommand {
        VelocityCommand::new(
            math::clamp(cmd.v, self.v_min, self.v_max),
            math::clamp(cmd.omega, self.omega_min, self.omega_max),
        )
    }
}

/// Velocities reachable from `current` within `dt` under the limits.
///
/// When the current velocity lies outside the limits the window is the
/// reachable point closest to them.
pub fn admissible_window(
    current: VelocityCommand,
    limits: &DynamicLimits,
    dt: f64,
    allow_reverse: bool,
) -> VelocityWindow {
    let v_floor = if allow_reverse { -limits.v_max } else { 0.0 };
    let (v_min, v_max) = reachable(current.v, limits.a_v_max * dt, v_floor, limits.v_max);
    let (omega_min, omega_max) = reachable(
        current.omega,
        limits.a_omega_max * dt,
        -limits.omega_max,
        limits.omega_max,
    );
    VelocityWindow {
        v_min,
        v_max,
        omega_min,
        omega_max,
    }
}

fn reachable(x: f64, step: f64, lo: f64, hi: f64) -> (f64, f64) {
    let a = (x - step).max(lo);
    let b = (x + step).min(hi);
    if a <= b {
        (a, b)
    } else {
        // Out-of-range current value: pull as far back as the step allows.
        let p = if x > hi { b.max(hi) } else { a.min(lo) };
        (p, p)
    }
}

/// Poses after each of `steps` periods of constant twist, starting from (but
/// not including) `pose`.
pub fn rollout(pose: Pose2D, cmd: VelocityCommand, dt: f64, steps: usize) -> Vec<Pose2D> {
    let mut out = Vec::with_capacity(steps);
    for k in 1..=steps {
        // Integrate from the start each time so error does not accumulate.
        out.push(pose.integrate(cmd.v, cmd.omega, dt * k as f64));
    }
    out
}

/// Euclidean goal test with an inclusive tolerance.
pub fn goal_reached(pose: &Pose2D, goal: Vec2, tolerance: f64) -> bool {
    pose.position().distance(goal) <= tolerance
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreWeights {
    pub progress: f64,
    pub clearance: f64,
    pub speed: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlannerConfig {
    /// Offset subtracted from scan ranges by the feature encoder.
    pub beta: f64,
    pub dt: f64,
    pub horizon_steps: usize,
    pub v_samples: usize,
    pub omega_samples: usize,
    pub weights: ScoreWeights,
    pub safety_margin: f64,
    /// Clearance beyond this counts as fully clear when scoring.
    pub clearance_cap: f64,
    pub goal_tolerance: f64,
    pub allow_reverse: bool,
    /// Score progress on a cost-to-go field built from the scan instead of
    /// straight-line goal distance.
    pub cost_field: bool,
    pub field_resolution: f64,
    /// Half-size of the square field around the robot.
    pub field_extent: f64,
    /// Width of the soft cost band outside the lethal radius.
    pub field_soft: f64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            beta: 0.0,
            dt: 0.1,
            horizon_steps: 15,
            v_samples: 7,
            omega_samples: 15,
            weights: ScoreWeights {
                progress: 1.0,
                clearance: 0.4,
                speed: 0.1,
            },
            safety_margin: 0.05,
            clearance_cap: 1.0,
            goal_tolerance: 0.1,
            allow_reverse: false,
            cost_field: true,
            field_resolution: 0.1,
            field_extent: 8.0,
            field_soft: 0.4,
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(invalid("beta must be finite and non-negative"));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(invalid("dt must be positive"));
        }
        if self.horizon_steps == 0 || self.v_samples == 0 || self.omega_samples == 0 {
            return Err(invalid("horizon and sample counts must be at least 1"));
        }
        let w = &self.weights;
        if ![w.progress, w.clearance, w.speed].iter().all(|x| x.is_finite()) {
            return Err(invalid("score weights must be finite"));
        }
        if self.cost_field
            && !(self.field_resolution > 0.0 && self.field_extent > 2.0 * self.field_resolution && self.field_soft >= 0.0)
        {
            return Err(invalid("cost field needs positive resolution and an extent of at least two cells"));
        }
        if !(self.safety_margin >= 0.0) || !(self.clearance_cap > 0.0) || !(self.goal_tolerance >= 0.0) {
            return Err(invalid("margins and tolerances must be non-negative"));
        }
        Ok(())
    }

    pub fn horizon(&self) -> f64 {
        self.dt * self.horizon_steps as f64
    }
}

/// A scored command from the sampling grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub cmd: VelocityCommand,
    pub safe: bool,
    /// Smallest footprint clearance over the rollout, capped at the
    /// configured clearance cap.
    pub min_clearance: f64,
    pub progress: f64,
    pub score: f64,
}

fn sample(lo: f64, hi: f64, i: usize, n: usize) -> f64 {
    if n == 1 {
        0.5 * (lo + hi)
    } else {
        // Clamped so the last sample can't overshoot `hi` by rounding.
        (lo + (hi - lo) * (i as f64 / (n - 1) as f64)).min(hi)
    }
}

/// Robot-frame obstacle points that can influence safety or the capped
/// clearance term within the horizon.
pub fn relevant_points(obs: &Observation, cfg: &PlannerConfig) -> Vec<Vec2> {
    let reach = obs.limits.v_max * cfg.horizon()
        + obs.body.circumscribed_radius()
        + cfg.safety_margin.max(cfg.clearance_cap);
    (0..obs.scan.ranges.len())
        .filter(|&k| obs.scan.ranges[k] < obs.scan.config.range_max && obs.scan.ranges[k] <= reach)
        .map(|k| obs.scan.endpoint(k))
        .collect()
}

/// Minimum footprint clearance of `points` over the rollout of `cmd`,
/// stopping early once it drops below `stop_below`.
pub fn rollout_clearance(
    points: &[Vec2],
    body: &RobotBody,
    cmd: VelocityCommand,
    cfg: &PlannerConfig,
    stop_below: f64,
) -> f64 {
    let poses = rollout(Pose2D::identity(), cmd, cfg.dt, cfg.horizon_steps);
    clearance_along(points, body, &poses, stop_below)
}

fn clearance_along(points: &[Vec2], body: &RobotBody, poses: &[Pose2D], stop_below: f64) -> f64 {
    let mut min = f64::INFINITY;
    for pose in poses {
        for p in points {
            let c = footprint_clearance(pose.inverse_transform_point(*p), body);
            if c < min {
                min = c;
                if min < stop_below {
                    return min;
                }
            }
        }
    }
    min
}

/// Distance ahead of the front face at which heading progress is probed.
pub const PROBE_AHEAD: f64 = 0.3;

/// Goal distance the planner descends: the cost-to-go field when enabled,
/// straight-line distance otherwise.
enum Progress {
    Euclidean(Vec2),
    Field(CostField),
}

impl Progress {
    fn new(obs: &Observation, cfg: &PlannerConfig) -> Self {
        if !cfg.cost_field {
            return Progress::Euclidean(obs.goal);
        }
        let points: Vec<Vec2> = (0..obs.scan.ranges.len())
            .filter(|&k| obs.scan.ranges[k] < obs.scan.config.range_max)
            .map(|k| obs.scan.endpoint(k))
            .collect();
        let lethal = obs.body.half_width() + cfg.safety_margin;
        match CostField::build(
            &points,
            obs.goal,
            lethal,
            cfg.field_soft,
            cfg.field_resolution,
            cfg.field_extent,
        ) {
            Ok(f) => Progress::Field(f),
            Err(_) => Progress::Euclidean(obs.goal),
        }
    }

    fn at(&self, p: Vec2) -> f64 {
        match self {
            Progress::Euclidean(g) => p.distance(*g),
            Progress::Field(f) => f.at(p),
        }
    }
}

/// Evaluates every grid command; `safe` is false for commands violating the
/// safety margin.
///
/// Progress is measured at the drive center (best pose along the rollout)
/// and at a probe point ahead of the final pose, so turning toward the
/// descent direction counts even before the robot moves.
pub fn evaluate_candidates(obs: &Observation, cfg: &PlannerConfig) -> Vec<Candidate> {
    let window = admissible_window(obs.velocity, &obs.limits, cfg.dt, cfg.allow_reverse);
    let points = relevant_points(obs, cfg);
    let field = Progress::new(obs, cfg);
    let probe = Vec2::new(0.0, obs.body.l_front + PROBE_AHEAD);
    let here = field.at(Vec2::new(0.0, 0.0));
    let here_probe = field.at(probe);
    let reach = obs.limits.v_max * cfg.horizon();
    // Near the goal the probe would overshoot it and penalize arriving.
    let use_probe = cfg.cost_field && here > probe.y + reach;
    let mut out = Vec::with_capacity(cfg.v_samples * cfg.omega_samples);
    for i in 0..cfg.v_samples {
        let v = sample(window.v_min, window.v_max, i, cfg.v_samples);
        for j in 0..cfg.omega_samples {
            let omega = sample(window.omega_min, window.omega_max, j, cfg.omega_samples);
            let cmd = VelocityCommand::new(v, omega);
            let poses = rollout(Pose2D::identity(), cmd, cfg.dt, cfg.horizon_steps);
            let clearance = clearance_along(&points, &obs.body, &poses, cfg.safety_margin);
            let safe = clearance >= cfg.safety_margin;
            let closest = poses.iter().map(|p| field.at(p.position())).fold(here, f64::min);
            let progress = if use_probe {
                let last = poses.last().copied().unwrap_or_else(Pose2D::identity);
                let probe_gain = here_probe - field.at(last.transform_point(probe));
                0.5 * ((here - closest) + probe_gain) / reach
            } else {
                (here - closest) / reach
            };
            let capped = clearance.min(cfg.clearance_cap);
            let w = &cfg.weights;
            let score = w.progress * progress
                + w.clearance * capped / cfg.clearance_cap
                + w.speed * v / obs.limits.v_max;
            out.push(Candidate {
                cmd,
                safe,
                min_clearance: capped,
                progress,
                score,
            });
        }
    }
    out
}

/// Command when no sampled command is safe: slow down as much as the window
/// allows and turn toward the goal.
pub fn fallback_command(obs: &Observation, cfg: &PlannerConfig) -> VelocityCommand {
    let window = admissible_window(obs.velocity, &obs.limits, cfg.dt, cfg.allow_reverse);
    let bearing = math::wrap_angle(obs.goal.angle() - FRAC_PI_2);
    let wanted = if obs.goal.norm() > 0.0 { bearing / cfg.dt } else { 0.0 };
    window.clamp(VelocityCommand::new(0.0, wanted))
}

fn better(a: &Candidate, b: &Candidate) -> bool {
    if (a.score - b.score).abs() > 1e-12 {
        return a.score > b.score;
    }
    let (wa, wb) = (a.cmd.omega.abs(), b.cmd.omega.abs());
    if wa != wb {
        return wa < wb;
    }
    a.cmd.v > b.cmd.v
}

/// Picks the best safe command, or [`fallback_command`] if none is safe.
pub fn plan(obs: &Observation, cfg: &PlannerConfig) -> VelocityCommand {
    let candidates = evaluate_candidates(obs, cfg);
    let mut best: Option<&Candidate> = None;
    for c in candidates.iter().filter(|c| c.safe) {
        if best.is_none_or(|b| better(c, b)) {
            best = Some(c);
        }
    }
    match best {
        Some(c) => c.cmd,
        None => fallback_command(obs, cfg),
    }
}

/// The built-in deterministic planner.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SamplingPlanner {
    pub config: PlannerConfig,
}

impl SamplingPlanner {
    pub fn new(config: PlannerConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self { config })
    }
}

impl Policy for SamplingPlanner {
    fn act(&self, obs: &Observation) -> VelocityCommand {
        plan(obs, &self.config)
    }
}
