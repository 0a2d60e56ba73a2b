//! Scan, planner and episode settings.

use std::path::Path;

use visnav_core::depth::DisparityDistortion;
use visnav_core::embodiment::EmbodimentProfile;
use visnav_core::planner::PlannerConfig;
use visnav_core::scan::ScanConfig;
use visnav_core::sim::EpisodeConfig;
use visnav_core::DynamicLimits;

use crate::error::Result;
use crate::kv::{num, KvDoc};

pub const SCAN_KEYS: &[&str] = &[
    "angle_min",
    "angle_max",
    "num_bins",
    "range_max",
    "h_min",
    "h_max",
    "pixel_stride",
];

pub const PLANNER_KEYS: &[&str] = &[
    "beta",
    "dt",
    "horizon_steps",
    "v_samples",
    "omega_samples",
    "w_progress",
    "w_clearance",
    "w_speed",
    "safety_margin",
    "clearance_cap",
    "goal_tolerance",
    "allow_reverse",
    "cost_field",
    "field_resolution",
    "field_extent",
    "field_soft",
];

pub const EPISODE_KEYS: &[&str] = &[
    "dt",
    "timeout_s",
    "timeout_factor",
    "goal_tolerance",
    "use_ground_truth_depth",
    "lidar_fill",
    "seed",
    "distortion_s1",
    "distortion_s2",
    "noise_sigma",
];

fn key(prefix: &str, k: &str) -> String {
    if prefix.is_empty() {
        k.to_string()
    } else {
        format!("{prefix}.{k}")
    }
}

fn prefixed(prefix: &str, keys: &[&str]) -> Vec<String> {
    keys.iter().map(|k| key(prefix, k)).collect()
}

/// Overrides fields of `base` with any scan keys under `prefix`.
pub fn apply_scan_keys(doc: &KvDoc, prefix: &str, base: ScanConfig) -> Result<ScanConfig> {
    let k = |s| key(prefix, s);
    let cfg = ScanConfig {
        angle_min: doc.f64_or(&k("angle_min"), base.angle_min)?,
        angle_max: doc.f64_or(&k("angle_max"), base.angle_max)?,
        num_bins: doc.usize(&k("num_bins"))?.unwrap_or(base.num_bins),
        range_max: doc.f64_or(&k("range_max"), base.range_max)?,
        h_min: doc.f64_or(&k("h_min"), base.h_min)?,
        h_max: doc.f64_or(&k("h_max"), base.h_max)?,
        pixel_stride: doc.usize(&k("pixel_stride"))?.unwrap_or(base.pixel_stride),
    };
    cfg.validate()?;
    Ok(cfg)
}

pub fn apply_planner_keys(doc: &KvDoc, prefix: &str, base: PlannerConfig) -> Result<PlannerConfig> {
    let k = |s| key(prefix, s);
    let mut cfg = base;
    cfg.beta = doc.f64_or(&k("beta"), cfg.beta)?;
    cfg.dt = doc.f64_or(&k("dt"), cfg.dt)?;
    cfg.horizon_steps = doc.usize(&k("horizon_steps"))?.unwrap_or(cfg.horizon_steps);
    cfg.v_samples = doc.usize(&k("v_samples"))?.unwrap_or(cfg.v_samples);
    cfg.omega_samples = doc.usize(&k("omega_samples"))?.unwrap_or(cfg.omega_samples);
    cfg.weights.progress = doc.f64_or(&k("w_progress"), cfg.weights.progress)?;
    cfg.weights.clearance = doc.f64_or(&k("w_clearance"), cfg.weights.clearance)?;
    cfg.weights.speed = doc.f64_or(&k("w_speed"), cfg.weights.speed)?;
    cfg.safety_margin = doc.f64_or(&k("safety_margin"), cfg.safety_margin)?;
    cfg.clearance_cap = doc.f64_or(&k("clearance_cap"), cfg.clearance_cap)?;
    cfg.goal_tolerance = doc.f64_or(&k("goal_tolerance"), cfg.goal_tolerance)?;
    cfg.allow_reverse = doc.bool(&k("allow_reverse"))?.unwrap_or(cfg.allow_reverse);
    cfg.cost_field = doc.bool(&k("cost_field"))?.unwrap_or(cfg.cost_field);
    cfg.field_resolution = doc.f64_or(&k("field_resolution"), cfg.field_resolution)?;
    cfg.field_extent = doc.f64_or(&k("field_extent"), cfg.field_extent)?;
    cfg.field_soft = doc.f64_or(&k("field_soft"), cfg.field_soft)?;
    cfg.validate()?;
    Ok(cfg)
}

/// Planner file: every [`PlannerConfig`] field as a top-level key.
pub fn load_planner_config(path: &Path) -> Result<PlannerConfig> {
    let doc = KvDoc::load(path)?;
    doc.check_keys(PLANNER_KEYS, &[])?;
    apply_planner_keys(&doc, "", PlannerConfig::default())
}

pub fn write_planner_config(cfg: &PlannerConfig) -> String {
    format!(
        "beta = {}\ndt = {}\nhorizon_steps = {}\nv_samples = {}\nomega_samples = {}\nw_progress = {}\nw_clearance = {}\nw_speed = {}\nsafety_margin = {}\nclearance_cap = {}\ngoal_tolerance = {}\nallow_reverse = {}\ncost_field = {}\nfield_resolution = {}\nfield_extent = {}\nfield_soft = {}\n",
        num(cfg.beta),
        num(cfg.dt),
        cfg.horizon_steps,
        cfg.v_samples,
        cfg.omega_samples,
        num(cfg.weights.progress),
        num(cfg.weights.clearance),
        num(cfg.weights.speed),
        num(cfg.safety_margin),
        num(cfg.clearance_cap),
        num(cfg.goal_tolerance),
        cfg.allow_reverse,
        cfg.cost_field,
        num(cfg.field_resolution),
        num(cfg.field_extent),
        num(cfg.field_soft),
    )
}

/// Scan file for the `scan` command; unspecified fields default to a
/// full-circle scan with band `(0.05, 1.0)`.
pub fn load_scan_config(path: &Path) -> Result<ScanConfig> {
    let doc = KvDoc::load(path)?;
    doc.check_keys(SCAN_KEYS, &[])?;
    apply_scan_keys(&doc, "", ScanConfig::for_robot_height(1.0))
}

pub fn load_limits(path: &Path) -> Result<DynamicLimits> {
    let doc = KvDoc::load(path)?;
    doc.check_keys(&["v_max", "omega_max", "a_v_max", "a_omega_max"], &[])?;
    Ok(DynamicLimits::new(
        doc.req_f64("v_max")?,
        doc.req_f64("omega_max")?,
        doc.req_f64("a_v_max")?,
        doc.req_f64("a_omega_max")?,
    )?)
}

/// Everything `simulate` and `benchmark` need besides the world and the
/// embodiment. Sections `[episode]`, `[scan]` and `[planner]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub dt: f64,
    /// Fixed timeout; when absent the timeout is `timeout_factor · T_opt`.
    pub timeout_s: Option<f64>,
    pub timeout_factor: f64,
    pub goal_tolerance: f64,
    pub use_ground_truth_depth: bool,
    pub lidar_fill: bool,
    pub seed: u64,
    pub distortion: Option<DisparityDistortion>,
    doc: Option<KvDoc>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dt: 0.1,
            timeout_s: None,
            timeout_factor: 10.0,
            goal_tolerance: 0.1,
            use_ground_truth_depth: true,
            lidar_fill: true,
            seed: 0,
            distortion: None,
            doc: None,
        }
    }
}

impl PartialEq for KvDoc {
    fn eq(&self, other: &Self) -> bool {
        self.path() == other.path()
    }
}

impl RunConfig {
    pub fn parse(doc: KvDoc) -> Result<Self> {
        let mut known = prefixed("episode", EPISODE_KEYS);
        known.extend(prefixed("scan", SCAN_KEYS));
        known.extend(prefixed("planner", PLANNER_KEYS));
        let known: Vec<&str> = known.iter().map(String::as_str).collect();
        doc.check_keys(&known, &[])?;
        let d = RunConfig::default();
        let s1 = doc.f64("episode.distortion_s1")?;
        let s2 = doc.f64("episode.distortion_s2")?;
        let sigma = doc.f64("episode.noise_sigma")?;
        let seed = doc.u64("episode.seed")?.unwrap_or(d.seed);
        let distortion = if s1.is_some() || s2.is_some() || sigma.is_some() {
            Some(DisparityDistortion::new(
                s1.unwrap_or(1.0),
                s2.unwrap_or(0.0),
                sigma.unwrap_or(0.0),
                seed,
            )?)
        } else {
            None
        };
        let cfg = Self {
            dt: doc.f64_or("episode.dt", d.dt)?,
            timeout_s: doc.f64("episode.timeout_s")?,
            timeout_factor: doc.f64_or("episode.timeout_factor", d.timeout_factor)?,
            goal_tolerance: doc.f64_or("episode.goal_tolerance", d.goal_tolerance)?,
            use_ground_truth_depth: doc
                .bool("episode.use_ground_truth_depth")?
                .unwrap_or(distortion.is_none()),
            lidar_fill: doc.bool("episode.lidar_fill")?.unwrap_or(d.lidar_fill),
            seed,
            distortion,
            doc: None,
        };
        if !(cfg.timeout_factor > 0.0) || cfg.timeout_s.is_some_and(|t| !(t > 0.0)) {
            return Err(doc.err("timeouts must be positive"));
        }
        // Validate the other sections now so errors surface before any work.
        apply_scan_keys(&doc, "scan", ScanConfig::for_robot_height(1.0))?;
        apply_planner_keys(&doc, "planner", PlannerConfig::default())?;
        Ok(Self { doc: Some(doc), ..cfg })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(KvDoc::load(path)?)
    }

    /// Scan settings for a robot: band up to its height unless overridden.
    pub fn scan_config(&self, profile: &EmbodimentProfile) -> Result<ScanConfig> {
        let base = ScanConfig::for_robot_height(profile.body.height);
        match &self.doc {
            Some(doc) => apply_scan_keys(doc, "scan", base),
            None => Ok(base),
        }
    }

    pub fn planner_config(&self) -> Result<PlannerConfig> {
        let base = PlannerConfig {
            dt: self.dt,
            goal_tolerance: self.goal_tolerance,
            ..PlannerConfig::default()
        };
        match &self.doc {
            Some(doc) => apply_planner_keys(doc, "planner", base),
            None => Ok(base),
        }
    }

    pub fn timeout_for(&self, t_opt: f64) -> f64 {
        self.timeout_s.unwrap_or(self.timeout_factor * t_opt)
    }

    pub fn episode_config(&self, profile: EmbodimentProfile, t_opt: f64, seed: u64) -> EpisodeConfig {
        EpisodeConfig {
            dt: self.dt,
            timeout_s: self.timeout_for(t_opt),
            embodiment: profile,
            distortion: self.distortion,
            use_ground_truth_depth: self.use_ground_truth_depth,
            lidar_fill: self.lidar_fill,
            goal_tolerance: self.goal_tolerance,
            seed,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn planner_file_round_trip() {
        let mut cfg = PlannerConfig::default();
        cfg.v_samples = 9;
        cfg.weights.clearance = 0.25;
        cfg.allow_reverse = true;
        let doc = KvDoc::parse(Path::new("p"), &write_planner_config(&cfg)).unwrap();
        doc.check_keys(PLANNER_KEYS, &[]).unwrap();
        assert_eq!(apply_planner_keys(&doc, "", PlannerConfig::default()).unwrap(), cfg);
    }

    #[test]
    fn run_config_sections() {
        let text = "[episode]\nnoise_sigma = 0.01\ndistortion_s1 = 2.5\nseed = 7\n[scan]\nh_max = 1.6\n[planner]\nv_samples = 5\n";
        let rc = RunConfig::parse(KvDoc::parse(Path::new("r"), text).unwrap()).unwrap();
        assert!(!rc.use_ground_truth_depth);
        let d = rc.distortion.unwrap();
        assert_eq!((d.s1, d.s2, d.noise_sigma, d.seed), (2.5, 0.0, 0.01, 7));
        let p = EmbodimentProfile::preset("sim").unwrap();
        assert_eq!(rc.scan_config(&p).unwrap().h_max, 1.6);
        assert_eq!(rc.planner_config().unwrap().v_samples, 5);
        assert_eq!(rc.timeout_for(3.0), 30.0);
        let bad = KvDoc::parse(Path::new("r"), "[episode]\nbogus = 1\n").unwrap();
        assert!(RunConfig::parse(bad).is_err());
    }
}
