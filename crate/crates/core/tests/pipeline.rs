//! Cross-module properties: depth synthesis, calibration, scan conversion,
//! planning and the closed loop.

use proptest::prelude::*;
use visnav_core::calibration::{calibrate_samples, CalibrationSample};
use visnav_core::depth::{apply_scale_correction, distort_to_relative, DisparityDistortion};
use visnav_core::embodiment::{EmbodimentProfile, FRONT_CAMERA_FOV};
use visnav_core::planner::SamplingPlanner;
use visnav_core::scan::{metric_depth_to_scan, visual_to_scan, ScanConfig};
use visnav_core::sim::{
    check_collision, ground_truth_scan, render_depth, run_episode, Bounds, EpisodeConfig, Obstacle, World,
};
use visnav_core::{CameraExtrinsics, CameraIntrinsics, Pose2D, Vec2};

fn camera() -> (CameraIntrinsics, CameraExtrinsics) {
    (
        CameraIntrinsics::from_hfov(160, 120, FRONT_CAMERA_FOV).unwrap(),
        CameraExtrinsics::from_mount(0.0, 0.03, 0.42, 0.0, 0.0),
    )
}

fn field(cylinders: &[(f64, f64, f64)]) -> World {
    World {
        obstacles: cylinders.iter().map(|&(x, y, r)| Obstacle::cylinder(x, y, r, 2.0)).collect(),
        bounds: Bounds::new(Vec2::new(-10.0, -10.0), Vec2::new(10.0, 10.0)).unwrap(),
        start: Pose2D::identity(),
        goal: Vec2::new(0.0, 5.0),
    }
}

fn cylinders() -> impl Strategy<Value = Vec<(f64, f64, f64)>> {
    proptest::collection::vec((-4.0f64..4.0, 0.8f64..6.0, 0.1f64..0.5), 1..8)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn exact_calibration_reproduces_metric_scan(
        obs in cylinders(),
        s1 in 0.5f64..5.0,
        s2 in -0.5f64..0.5,
    ) {
        let (intr, ext) = camera();
        let cfg = ScanConfig::for_robot_height(1.0);
        let w = field(&obs);
        let depth = render_depth(&w, &Pose2D::identity(), &intr, &ext, cfg.pixel_stride).unwrap();
        let rel = distort_to_relative(&depth, &DisparityDistortion::new(s1, s2, 0.0, 0).unwrap()).unwrap();
        let via_rel = visual_to_scan(&rel, s1, s2, &intr, &ext, &cfg).unwrap();
        let (direct, _) = metric_depth_to_scan(&depth, &intr, &ext, &cfg).unwrap();
        for (a, b) in via_rel.ranges.iter().zip(&direct.ranges) {
            prop_assert!((a - b).abs() <= 1e-9 * b.max(1.0), "{} vs {}", a, b);
        }
    }

    #[test]
    fn camera_scan_never_undercuts_exact_sector_minimum(obs in cylinders(), heading in -0.3f64..0.3) {
        let (intr, ext) = camera();
        let cfg = ScanConfig::for_robot_height(1.0);
        let w = field(&obs);
        let pose = Pose2D::new(0.0, 0.0, heading);
        let depth = render_depth(&w, &pose, &intr, &ext, cfg.pixel_stride).unwrap();
        let (scan, _) = metric_depth_to_scan(&depth, &intr, &ext, &cfg).unwrap();
        let exact = ground_truth_scan(&w, &pose, &cfg).unwrap();
        for (a, b) in scan.ranges.iter().zip(&exact.ranges) {
            prop_assert!(*a >= b - 1e-9);
        }
    }

    #[test]
    fn narrower_band_never_shortens_a_bin(
        obs in cylinders(),
        base in 0.0f64..1.5,
        h_lo in 0.05f64..0.4,
        h_hi in 0.6f64..1.8,
        shrink in 0.0f64..0.2,
    ) {
        let (intr, ext) = camera();
        let mut w = field(&obs);
        for (i, o) in w.obstacles.iter_mut().enumerate() {
            if i % 2 == 1 {
                *o = o.with_base(base);
            }
        }
        let wide = ScanConfig { h_min: h_lo, h_max: h_hi, ..ScanConfig::for_robot_height(1.0) };
        let narrow = ScanConfig { h_min: h_lo + shrink, h_max: h_hi - shrink, ..wide };
        let depth = render_depth(&w, &Pose2D::identity(), &intr, &ext, wide.pixel_stride).unwrap();
        let (a, _) = metric_depth_to_scan(&depth, &intr, &ext, &wide).unwrap();
        let (b, _) = metric_depth_to_scan(&depth, &intr, &ext, &narrow).unwrap();
        for (x, y) in a.ranges.iter().zip(&b.ranges) {
            prop_assert!(y >= x);
        }
    }

    #[test]
    fn samples_from_affine_disparity_recover_the_map(
        s1 in 0.5f64..5.0,
        s2 in -0.5f64..0.5,
        depths in proptest::collection::vec(0.5f64..4.0, 4..30),
    ) {
        prop_assume!(depths.iter().cloned().fold(0.0, f64::max) > 1.5 * depths.iter().cloned().fold(f64::INFINITY, f64::min));
        let samples: Vec<CalibrationSample> = depths
            .iter()
            .map(|&z| CalibrationSample { d_pred: (1.0 / z - s2) / s1, z_real: z })
            .collect();
        let r = calibrate_samples(&samples, 0.0).unwrap();
        prop_assert!((r.s1 - s1).abs() <= 1e-8 * s1);
        prop_assert!((r.s2 - s2).abs() <= 1e-8 * s1);
        prop_assert!(r.residual_rms < 1e-9);
    }

    #[test]
    fn correction_inverts_distortion(z in 0.3f64..20.0, s1 in 0.5f64..5.0, s2 in -0.5f64..0.5) {
        let img = visnav_core::depth::DepthImage::from_fn(2, 2, visnav_core::depth::DepthKind::Metric, |_, _| Some(z));
        let rel = distort_to_relative(&img, &DisparityDistortion::new(s1, s2, 0.0, 0).unwrap()).unwrap();
        let back = apply_scale_correction(&rel, s1, s2).unwrap();
        prop_assert!((back.get(1, 1).unwrap() - z).abs() <= 1e-9 * z);
    }
}

#[test]
fn closed_loop_is_deterministic_and_collision_free_on_a_simple_course() {
    let profile = EmbodimentProfile::preset("sim").unwrap();
    let w = World {
        obstacles: vec![Obstacle::cylinder(2.2, 4.0, 0.3, 2.0), Obstacle::cylinder(3.4, 5.5, 0.25, 2.0)],
        bounds: Bounds::new(Vec2::new(0.0, 0.0), Vec2::new(5.0, 8.0)).unwrap(),
        start: Pose2D::new(2.5, 1.0, 0.0),
        goal: Vec2::new(2.5, 7.0),
    };
    let mut cfg = EpisodeConfig::new(profile.clone(), 60.0);
    cfg.use_ground_truth_depth = false;
    cfg.distortion = Some(DisparityDistortion::new(2.0, 0.1, 0.01, 9).unwrap());
    cfg.seed = 4;
    let planner = SamplingPlanner::new(Default::default()).unwrap();
    let scan_cfg = ScanConfig::for_robot_height(profile.body.height);
    let a = run_episode(&w, &cfg, &planner, &scan_cfg).unwrap();
    let b = run_episode(&w, &cfg, &planner, &scan_cfg).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.outcome, visnav_core::metrics::Outcome::Success, "{:?}", a.outcome);
    assert!(a.trajectory.iter().all(|p| !check_collision(&w, p, &profile.body)));
    assert!(a.path_length >= 6.0 - cfg.goal_tolerance);
}
