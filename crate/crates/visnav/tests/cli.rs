use std::path::{Path, PathBuf};

use visnav::bench::parse_results_csv;
use visnav::cli::run_captured;
use visnav::formats::camera::{load_camera, load_embodiment};
use visnav::formats::config::{load_limits, load_planner_config, load_scan_config, RunConfig};
use visnav::formats::records::{load_episode, load_scale, write_annotations};
use visnav::formats::scan::{load_scan, write_scan};
use visnav::formats::scenario::write_scenario;
use visnav::pfm::save_pfm;
use visnav_core::depth::{distort_to_relative, DepthImage, DepthKind, DisparityDistortion};
use visnav_core::geometry::rodrigues;
use visnav_core::metrics::Outcome;
use visnav_core::pnp::{marker_object_points, MarkerObservation};
use visnav_core::scan::{ScanConfig, VirtualScan};
use visnav_core::sim::{render_depth, Bounds, Obstacle, World};
use visnav_core::{Pose2D, Vec2, Vec3};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn cfg(name: &str) -> String {
    configs().join(name).to_string_lossy().into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn kv_value(text: &str, key: &str) -> f64 {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key} = ")))
        .unwrap_or_else(|| panic!("no {key} in {text:?}"))
        .trim()
        .parse()
        .unwrap()
}

fn empty_field() -> World {
    World {
        obstacles: vec![],
        bounds: Bounds::new(Vec2::new(0.0, 0.0), Vec2::new(5.0, 8.0)).unwrap(),
        start: Pose2D::new(2.5, 1.0, 0.0),
        goal: Vec2::new(2.5, 7.0),
    }
}

#[test]
fn help_exits_zero() {
    let (code, out, err) = run_captured(&["--help"]);
    assert_eq!(code, 0);
    assert!(out.contains("benchmark") && out.contains("vln-step"), "{out}");
    assert!(err.is_empty());
    for sub in ["calibrate", "scan", "plan", "simulate", "gen-scenarios", "benchmark", "eval-depth", "vln-step", "plot"] {
        let (code, out, _) = run_captured(&[sub, "--help"]);
        assert_eq!(code, 0, "{sub}");
        assert!(out.contains("--"), "{sub}: {out}");
    }
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(run_captured(&["teleport"]).0, 2);
    assert_eq!(run_captured(&["plan", "--goal", "1,2"]).0, 2);
    let (code, out, _) = run_captured(&["vln-step", "--conf", "0 0.5 0.5", "--pose", "0,0,0"]);
    assert_eq!(code, 2);
    assert!(out.is_empty());
}

#[test]
fn missing_input_exits_three_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out, err) = run_captured(&[
        "eval-depth",
        "--pred",
        s(&dir.path().join("nope.pfm")),
        "--gt",
        s(&dir.path().join("nope.pfm")),
    ]);
    assert_eq!(code, 3);
    assert!(out.is_empty());
    assert!(err.contains("nope.pfm"), "{err}");
}

#[test]
fn malformed_file_exits_four() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.pfm");
    std::fs::write(&bad, b"P5\n1 1\n-1\n\0\0\0\0").unwrap();
    let (code, _, _) = run_captured(&["eval-depth", "--pred", s(&bad), "--gt", s(&bad)]);
    assert_eq!(code, 4);
}

#[test]
fn bad_numbers_exit_five() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, _) = run_captured(&[
        "benchmark", "--suite", ".", "--embodiment", "x", "--vmax", "fast", "--out", s(dir.path()),
    ]);
    assert_eq!(code, 5);
    let scan = dir.path().join("scan.txt");
    std::fs::write(&scan, write_scan(&VirtualScan::empty(ScanConfig::for_robot_height(0.5)))).unwrap();
    let (code, _, err) = run_captured(&[
        "plan", "--scan", s(&scan), "--goal", "one,2", "--body", "0.2,0.2,0.4", "--limits", &cfg("limits.cfg"),
    ]);
    assert_eq!(code, 5, "{err}");
}

#[test]
fn eval_depth_reports_errors() {
    let dir = tempfile::tempdir().unwrap();
    let pred = DepthImage::from_fn(4, 3, DepthKind::Metric, |u, _| Some(2.0 + if u == 0 { 0.6 } else { 0.0 }));
    let gt = DepthImage::from_fn(4, 3, DepthKind::Metric, |_, v| (v != 2).then_some(2.0));
    let (p, g) = (dir.path().join("p.pfm"), dir.path().join("g.pfm"));
    save_pfm(&p, &pred).unwrap();
    save_pfm(&g, &gt).unwrap();
    let (code, out, _) = run_captured(&["eval-depth", "--pred", s(&p), "--gt", s(&g)]);
    assert_eq!(code, 0);
    // Two of eight jointly valid pixels are off by 0.6 m.
    assert!((kv_value(&out, "mae") - 0.15).abs() < 1e-6, "{out}");
    assert!((kv_value(&out, "rmse") - 0.3).abs() < 1e-6, "{out}");
    assert_eq!(kv_value(&out, "count"), 8.0);
}

fn vln_line(out: &str) -> Vec<f64> {
    out.split_whitespace()
        .collect::<Vec<_>>()
        .chunks(3)
        .filter(|c| c[0] != "arrived")
        .map(|c| c[2].parse().unwrap())
        .collect()
}

#[test]
fn vln_step_branches() {
    for (center, d) in [(0.9, 1.27), (0.7, 2.35), (0.5, 3.0), (0.8, 2.4), (0.65, 3.0)] {
        let conf = format!("0 0.1 {center} 0.05");
        let (code, out, err) = run_captured(&["vln-step", "--conf", &conf, "--pose", "1,2,0"]);
        assert_eq!(code, 0, "{err}");
        let v = vln_line(&out);
        // t x y d_cmd theta_cmd; heading 0 faces +y.
        assert!((v[1] - 1.0).abs() < 1e-12 && (v[2] - (2.0 + d)).abs() < 1e-9, "{out}");
        assert!((v[3] - d).abs() < 1e-12 && v[4] == 0.0, "{out}");
    }
}

#[test]
fn vln_step_stream_detects_arrival() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("conf.txt");
    let mut text = String::from("0.0 0.9 0.1 0.1\n");
    for i in 1..=5 {
        text.push_str(&format!("{}.0 0.1 0.95 0.1\n", i));
    }
    std::fs::write(&f, text).unwrap();
    let (code, out, _) = run_captured(&["vln-step", "--conf", s(&f), "--pose", "0,0,0", "--frames", "5"]);
    assert_eq!(code, 0);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 6);
    // First record turns left toward the confident region.
    assert!(vln_line(lines[0])[4] > 0.0);
    assert!(lines[4].ends_with("arrived = false"));
    assert!(lines[5].ends_with("arrived = true"));
}

#[test]
fn plan_prints_velocity_pair() {
    let dir = tempfile::tempdir().unwrap();
    let scan = dir.path().join("scan.txt");
    std::fs::write(&scan, write_scan(&VirtualScan::empty(ScanConfig::for_robot_height(0.5)))).unwrap();
    let (code, out, err) = run_captured(&[
        "plan",
        "--scan",
        s(&scan),
        "--goal",
        "0,3",
        "--body",
        "0.21,0.21,0.5",
        "--limits",
        &cfg("limits.cfg"),
        "--config",
        &cfg("planner.cfg"),
    ]);
    assert_eq!(code, 0, "{err}");
    let v: Vec<f64> = out.split_whitespace().map(|t| t.parse().unwrap()).collect();
    assert_eq!(v.len(), 2);
    // From rest one 0.1 s step at 3 m/s² allows at most 0.3 m/s, straight at the goal.
    assert!(v[0] > 0.0 && v[0] <= 0.3 + 1e-12, "{out}");
    assert_eq!(v[1], 0.0);
}

fn wall_depth(dir: &Path) -> (PathBuf, DepthImage) {
    let rig = load_camera(&configs().join("front.cam")).unwrap();
    let world = World {
        obstacles: vec![Obstacle::boxed(0.0, 3.0, 4.0, 0.5, 2.0)],
        ..empty_field()
    };
    let d = render_depth(&world, &Pose2D::identity(), &rig.intrinsics, &rig.extrinsics, 1).unwrap();
    let p = dir.join("metric.pfm");
    save_pfm(&p, &d).unwrap();
    (p, d)
}

#[test]
fn scan_from_metric_and_relative_depth() {
    let dir = tempfile::tempdir().unwrap();
    let (metric, d) = wall_depth(dir.path());
    let a = dir.path().join("a.txt");
    let (code, _, err) = run_captured(&[
        "scan", "--depth", s(&metric), "--camera", &cfg("front.cam"), "--config", &cfg("scan.cfg"), "--out", s(&a),
    ]);
    assert_eq!(code, 0, "{err}");
    let scan = load_scan(&a).unwrap();
    let ahead = scan.config.bin_of(std::f64::consts::FRAC_PI_2).unwrap();
    assert!((scan.ranges[ahead] - 2.5).abs() < 0.02, "{}", scan.ranges[ahead]);

    // Relative depth with the identity calibration gives the same scan.
    let scale = load_scale(&configs().join("front.calib")).unwrap();
    let rel = distort_to_relative(&d, &DisparityDistortion::new(scale.s1, scale.s2, 0.0, 0).unwrap()).unwrap();
    let rel_path = dir.path().join("rel.pfm");
    save_pfm(&rel_path, &rel).unwrap();
    let b = dir.path().join("b.txt");
    let (code, _, err) = run_captured(&[
        "scan",
        "--depth",
        s(&rel_path),
        "--camera",
        &cfg("front.cam"),
        "--calib",
        &cfg("front.calib"),
        "--config",
        &cfg("scan.cfg"),
        "--out",
        s(&b),
    ]);
    assert_eq!(code, 0, "{err}");
    let other = load_scan(&b).unwrap();
    for (x, y) in scan.ranges.iter().zip(&other.ranges) {
        // PFM stores 32-bit floats.
        assert!((x - y).abs() < 1e-5, "{x} vs {y}");
    }
}

#[test]
fn calibrate_recovers_scale_from_files() {
    let dir = tempfile::tempdir().unwrap();
    let rig = load_camera(&configs().join("front.cam")).unwrap();
    let intr = rig.intrinsics;
    let (s1, s2) = (2.5, 0.2);
    let images = dir.path().join("images");
    std::fs::create_dir(&images).unwrap();
    let mut obs = Vec::new();
    for (i, z) in [0.5, 1.2, 2.5, 4.0].into_iter().enumerate() {
        let r = rodrigues(Vec3::new(0.1 * i as f64, -0.05, 0.3));
        let t = Vec3::new(0.05, -0.03, z);
        let size = 0.25 * z;
        let normal = r.col(2);
        let offset = normal.dot(t);
        let metric = DepthImage::from_fn(intr.width, intr.height, DepthKind::Metric, |u, v| {
            let ray = Vec3::new((u as f64 - intr.cx) / intr.fx, (v as f64 - intr.cy) / intr.fy, 1.0);
            Some(offset / normal.dot(ray))
        });
        let rel = distort_to_relative(&metric, &DisparityDistortion::new(s1, s2, 0.0, 0).unwrap()).unwrap();
        let id = format!("frame{i}");
        save_pfm(&images.join(format!("{id}.pfm")), &rel).unwrap();
        obs.push(MarkerObservation {
            image_id: id,
            marker_id: i as u32,
            size,
            corners: marker_object_points(size).unwrap().map(|p| intr.project_point(r * p + t).unwrap()),
        });
    }
    let ann = dir.path().join("markers.txt");
    std::fs::write(&ann, write_annotations(&obs)).unwrap();
    let out = dir.path().join("calib.txt");
    let (code, stdout, err) = run_captured(&[
        "calibrate",
        "--images",
        s(&images),
        "--annotations",
        s(&ann),
        "--camera",
        &cfg("front.cam"),
        "--lambda",
        "1e-8",
        "--out",
        s(&out),
    ]);
    assert_eq!(code, 0, "{err}");
    assert_eq!(kv_value(&stdout, "sample_count"), 16.0);
    let got = load_scale(&out).unwrap();
    assert!((got.s1 - s1).abs() < 1e-6 * s1, "{got:?}");
    assert!((got.s2 - s2).abs() < 1e-6 * s1, "{got:?}");
}

#[test]
fn simulate_empty_field_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let scn = dir.path().join("empty.scn");
    std::fs::write(&scn, write_scenario(&empty_field())).unwrap();
    let (res, svg) = (dir.path().join("ep.txt"), dir.path().join("ep.svg"));
    let (code, out, err) = run_captured(&[
        "simulate",
        "--scenario",
        s(&scn),
        "--embodiment",
        &cfg("sim.emb"),
        "--config",
        &cfg("run.cfg"),
        "--out",
        s(&res),
        "--plot",
        s(&svg),
    ]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("outcome = success"), "{out}");
    let ep = load_episode(&res).unwrap();
    assert_eq!(ep.result.outcome, Outcome::Success);
    // 5.9 m to the tolerance circle at 0.5 m/s plus the ramp up.
    assert!(ep.result.t_act > 11.8 && ep.result.t_act < 13.0, "{}", ep.result.t_act);
    assert!(ep.metric > 0.0 && ep.metric <= 0.5);
    let text = std::fs::read_to_string(&svg).unwrap();
    roxmltree::Document::parse(&text).unwrap();

    let again = dir.path().join("again.svg");
    let (code, _, err) = run_captured(&[
        "plot", "--scenario", s(&scn), "--result", s(&res), "--embodiment", &cfg("sim.emb"), "--out", s(&again),
    ]);
    assert_eq!(code, 0, "{err}");
    assert_eq!(std::fs::read_to_string(&again).unwrap(), text);
}

#[test]
fn gen_scenarios_then_benchmark() {
    let dir = tempfile::tempdir().unwrap();
    let suite = dir.path().join("suite");
    let (code, _, err) = run_captured(&["gen-scenarios", "--seed", "5", "--count", "2", "--out", s(&suite)]);
    assert_eq!(code, 0, "{err}");
    let mut names: Vec<String> = std::fs::read_dir(&suite)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    assert_eq!(names, ["scenario_000.scn", "scenario_001.scn"]);

    let out = dir.path().join("out");
    let (code, stdout, err) = run_captured(&[
        "benchmark",
        "--suite",
        s(&suite),
        "--embodiment",
        &cfg("sim.emb"),
        "--vmax",
        "0.5",
        "--trials",
        "1",
        "--plots",
        "--out",
        s(&out),
    ]);
    assert_eq!(code, 0, "{err}");
    assert_eq!(kv_value(&stdout, "episodes"), 2.0);
    let csv = std::fs::read_to_string(out.join("results.csv")).unwrap();
    let (rows, agg) = parse_results_csv(&out.join("results.csv"), &csv).unwrap();
    assert_eq!(rows.len(), 2);
    assert!((agg.success_rate + agg.collision_rate + agg.timeout_rate - 1.0).abs() < 1e-12);
    let report = std::fs::read_to_string(out.join("report.md")).unwrap();
    assert!(report.contains("| Metric (↑) | SR (↑) | CR (↓) | TR (↓) |"));
    for r in &rows {
        let stem = format!("{}_t{}", r.scenario, r.trial);
        assert!(out.join("trajectories").join(format!("{stem}.txt")).is_file());
        assert!(out.join("plots").join(format!("{stem}.svg")).is_file());
    }
}

#[test]
fn shipped_configs_parse() {
    let c = configs();
    for emb in ["sim.emb", "dmr2.emb", "custom.emb"] {
        load_embodiment(&c.join(emb)).unwrap_or_else(|e| panic!("{emb}: {e}"));
    }
    let custom = load_embodiment(&c.join("custom.emb")).unwrap();
    assert_eq!(custom.cameras.len(), 1);
    assert!(custom.cameras[0].scale.is_some());
    load_camera(&c.join("front.cam")).unwrap();
    load_scale(&c.join("front.calib")).unwrap();
    load_limits(&c.join("limits.cfg")).unwrap();
    assert_eq!(load_planner_config(&c.join("planner.cfg")).unwrap(), Default::default());
    load_scan_config(&c.join("scan.cfg")).unwrap();
    let run = RunConfig::load(&c.join("run.cfg")).unwrap();
    assert!(run.distortion.is_none() && run.use_ground_truth_depth);
    let noisy = RunConfig::load(&c.join("noisy.cfg")).unwrap();
    let d = noisy.distortion.unwrap();
    assert_eq!((d.s1, d.s2, d.noise_sigma), (2.0, 0.1, 0.01));
    assert!(!noisy.use_ground_truth_depth);
}
