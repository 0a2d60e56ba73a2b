//! Closed-loop episodes: render, convert to scans, plan, move, check.

use alloc::vec;
use alloc::vec::Vec;

use super::collision::{check_collision, min_clearance};
use super::dynamics::{step_dynamics, RobotState};
use super::render::{ground_truth_scan_masked, render_depth};
use super::world::World;
use crate::depth::{apply_scale_correction, distort_to_relative, DisparityDistortion};
use crate::embodiment::{EmbodimentProfile, ScaleParams};
use crate::error::{invalid, Result};
use crate::geometry::Pose2D;
use crate::metrics::Outcome;
use crate::planner::{goal_reached, Observation, Policy, VelocityCommand};
use crate::scan::{camera_coverage, merge_scans, metric_depth_to_scan, ScanConfig, VirtualScan};

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeConfig {
    pub dt: f64,
    pub timeout_s: f64,
    pub embodiment: EmbodimentProfile,
    /// Ground-truth affine distortion applied to every rendered frame;
    /// its seed is mixed with the episode seed, step and camera index.
    pub distortion: Option<DisparityDistortion>,
    /// Feed rendered metric depth straight to the scan stage.
    pub use_ground_truth_depth: bool,
    /// Fill bins no camera covers from the exact planar scan.
    pub lidar_fill: bool,
    pub goal_tolerance: f64,
    pub seed: u64,
}

impl EpisodeConfig {
    pub fn new(embodiment: EmbodimentProfile, timeout_s: f64) -> Self {
        Self {
            dt: 0.1,
            timeout_s,
            embodiment,
            distortion: None,
            use_ground_truth_depth: true,
            lidar_fill: true,
            goal_tolerance: 0.1,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) || !(self.timeout_s > 0.0) {
            return Err(invalid("dt and timeout must be positive"));
        }
        if !(self.goal_tolerance > 0.0) {
            return Err(invalid("goal tolerance must be positive"));
        }
        self.embodiment.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeResult {
    pub outcome: Outcome,
    pub t_act: f64,
    pub path_length: f64,
    pub trajectory: Vec<Pose2D>,
    /// Smallest footprint-to-obstacle gap seen along the trajectory.
    pub min_clearance: f64,
    pub steps: usize,
}

fn mix_seed(mut x: u64) -> u64 {
    // splitmix64 finalizer
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Per-episode perception: one scan per step from all cameras, optionally
/// topped up by the planar oracle outside camera coverage.
pub struct Perception<'a> {
    world: &'a World,
    cfg: &'a EpisodeConfig,
    scan_cfg: ScanConfig,
    uncovered: Vec<bool>,
}

impl<'a> Perception<'a> {
    pub fn new(world: &'a World, cfg: &'a EpisodeConfig, scan_cfg: &ScanConfig) -> Result<Self> {
        scan_cfg.validate()?;
        let mut covered = vec![false; scan_cfg.num_bins];
        for cam in &cfg.embodiment.cameras {
            for (c, k) in covered.iter_mut().zip(camera_coverage(&cam.intrinsics, &cam.extrinsics, scan_cfg)?) {
                *c |= k;
            }
        }
        Ok(Self {
            world,
            cfg,
            scan_cfg: *scan_cfg,
            uncovered: covered.iter().map(|c| !c).collect(),
        })
    }

    pub fn scan(&self, pose: &Pose2D, step: usize) -> Result<VirtualScan> {
        let mut scans = Vec::with_capacity(self.cfg.embodiment.cameras.len() + 1);
        for (i, cam) in self.cfg.embodiment.cameras.iter().enumerate() {
            let mut depth = render_depth(
                self.world,
                pose,
                &cam.intrinsics,
                &cam.extrinsics,
                self.scan_cfg.pixel_stride,
            )?;
            if !self.cfg.use_ground_truth_depth {
                let truth = self.cfg.distortion.unwrap_or(DisparityDistortion {
                    s1: 1.0,
                    s2: 0.0,
                    noise_sigma: 0.0,
                    seed: 0,
                });
                let frame = DisparityDistortion {
                    seed: mix_seed(truth.seed ^ mix_seed(self.cfg.seed) ^ mix_seed((step as u64) << 8 | i as u64)),
                    ..truth
                };
                let rel = distort_to_relative(&depth, &frame)?;
                let scale = cam.scale.unwrap_or(ScaleParams {
                    s1: truth.s1,
                    s2: truth.s2,
                });
                depth = apply_scale_correction(&rel, scale.s1, scale.s2)?;
            }
            scans.push(metric_depth_to_scan(&depth, &cam.intrinsics, &cam.extrinsics, &self.scan_cfg)?.0);
        }
        if self.cfg.lidar_fill && self.uncovered.iter().any(|u| *u) {
            scans.push(ground_truth_scan_masked(
                self.world,
                pose,
                &self.scan_cfg,
                Some(&self.uncovered),
            )?);
        }
        if scans.is_empty() {
            return Ok(VirtualScan::empty(self.scan_cfg));
        }
        merge_scans(&scans)
    }
}

/// Runs one episode to success, collision or timeout. Checks happen after
/// every step in that order.
pub fn run_episode(
    world: &World,
    cfg: &EpisodeConfig,
    policy: &dyn Policy,
    scan_cfg: &ScanConfig,
) -> Result<EpisodeResult> {
    cfg.validate()?;
    world.validate()?;
    let body = cfg.embodiment.body;
    let limits = cfg.embodiment.limits;
    let perception = Perception::new(world, cfg, scan_cfg)?;
    let mut state = RobotState {
        pose: world.start,
        velocity: VelocityCommand::STOP,
    };
    let mut trajectory = vec![state.pose];
    let mut path_length = 0.0;
    let mut clearance = min_clearance(world, &state.pose, &body);
    let mut steps = 0usize;
    let finish = |outcome, steps: usize, trajectory, path_length, clearance| EpisodeResult {
        outcome,
        t_act: steps as f64 * cfg.dt,
        path_length,
        trajectory,
        min_clearance: clearance,
        steps,
    };
    if goal_reached(&state.pose, world.goal, cfg.goal_tolerance) {
        return Ok(finish(Outcome::Success, 0, trajectory, 0.0, clearance));
    }
    loop {
        let scan = perception.scan(&state.pose, steps)?;
        let obs = Observation {
            scan,
            goal: state.pose.inverse_transform_point(world.goal),
            velocity: state.velocity,
            limits,
            body,
        };
        let cmd = policy.act(&obs);
        let next = step_dynamics(&state, cmd, &limits, cfg.dt);
        path_length += next.pose.position().distance(state.pose.position());
        state = next;
        steps += 1;
        trajectory.push(state.pose);
        clearance = clearance.min(min_clearance(world, &state.pose, &body));
        let t = steps as f64 * cfg.dt;
        let outcome = if check_collision(world, &state.pose, &body) {
            Some(Outcome::Collision)
        } else if goal_reached(&state.pose, world.goal, cfg.goal_tolerance) {
            Some(Outcome::Success)
        } else if t > cfg.timeout_s + 1e-9 {
            Some(Outcome::Timeout)
        } else {
            None
        };
        if let Some(o) = outcome {
            return Ok(finish(o, steps, trajectory, path_length, clearance));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embodiment::FRONT_CAMERA_FOV;
    use crate::geometry::{CameraIntrinsics, Vec2};
    use crate::planner::{PlannerConfig, SamplingPlanner};
    use crate::sim::world::{Bounds, Obstacle};

    fn profile() -> EmbodimentProfile {
        let mut p = EmbodimentProfile::preset("sim").unwrap();
        p.limits.a_v_max = 1.0;
        for c in &mut p.cameras {
            c.intrinsics = CameraIntrinsics::from_hfov(160, 120, FRONT_CAMERA_FOV).unwrap();
        }
        p
    }

    fn open_world(obstacles: Vec<Obstacle>) -> World {
        World {
            obstacles,
            bounds: Bounds::new(Vec2::new(-4.0, -2.0), Vec2::new(4.0, 8.0)).unwrap(),
            start: Pose2D::identity(),
            goal: Vec2::new(0.0, 5.0),
        }
    }

    fn planner() -> SamplingPlanner {
        SamplingPlanner::new(PlannerConfig::default()).unwrap()
    }

    #[test]
    fn empty_world_reaches_goal_in_kinematic_time() {
        let cfg = EpisodeConfig::new(profile(), 60.0);
        let r = run_episode(&open_world(vec![]), &cfg, &planner(), &ScanConfig::for_robot_height(0.5)).unwrap();
        assert_eq!(r.outcome, Outcome::Success);
        // 4.9 m at 0.5 m/s plus a 0.25 s ramp penalty is the lower bound.
        assert!(r.t_act >= 10.0 && r.t_act <= 11.0, "{}", r.t_act);
        assert_eq!(r.trajectory.len(), r.steps + 1);
    }

    #[test]
    fn short_timeout() {
        let mut cfg = EpisodeConfig::new(profile(), 0.1);
        cfg.lidar_fill = false;
        let r = run_episode(&open_world(vec![]), &cfg, &planner(), &ScanConfig::for_robot_height(0.5)).unwrap();
        assert_eq!(r.outcome, Outcome::Timeout);
        assert_eq!(r.steps, 2);
    }

    #[test]
    fn enclosed_goal_times_out_without_collision() {
        let wall = |x, y, hx, hy| Obstacle::boxed(x, y, hx, hy, 2.0);
        let w = open_world(vec![
            wall(0.0, 4.0, 1.2, 0.1),
            wall(0.0, 6.0, 1.2, 0.1),
            wall(-1.1, 5.0, 0.1, 1.0),
            wall(1.1, 5.0, 0.1, 1.0),
        ]);
        let cfg = EpisodeConfig::new(profile(), 25.0);
        let r = run_episode(&w, &cfg, &planner(), &ScanConfig::for_robot_height(0.5)).unwrap();
        assert_eq!(r.outcome, Outcome::Timeout);
        assert!(r.min_clearance > 0.0);
    }

    #[test]
    fn deterministic_with_noise() {
        let mut cfg = EpisodeConfig::new(profile(), 4.0);
        cfg.use_ground_truth_depth = false;
        cfg.distortion = Some(DisparityDistortion::new(2.0, 0.1, 0.01, 5).unwrap());
        cfg.seed = 9;
        let w = open_world(vec![Obstacle::cylinder(0.3, 2.5, 0.25, 2.0)]);
        let a = run_episode(&w, &cfg, &planner(), &ScanConfig::for_robot_height(0.5)).unwrap();
        let b = run_episode(&w, &cfg, &planner(), &ScanConfig::for_robot_height(0.5)).unwrap();
        assert_eq!(a, b);
    }
}
