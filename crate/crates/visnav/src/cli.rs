//! The `visnav` command line.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use visnav_core::calibration::{calibrate, CalibrationImage, DEFAULT_LAMBDA};
use visnav_core::depth::{apply_scale_correction, eval_depth, DepthKind};
use visnav_core::embodiment::EmbodimentProfile;
use visnav_core::metrics::{metric_score, optimal_time, Outcome};
use visnav_core::planner::{plan, Observation, SamplingPlanner, VelocityCommand};
use visnav_core::scan::metric_depth_to_scan;
use visnav_core::sim::{dijkstra_path_length, generate_scenario, run_episode, ScenarioParams};
use visnav_core::vln::{command_from_confidence, to_world, ArrivalDetector, RegionConfidence};
use visnav_core::{Pose2D, RobotBody, Vec2};

use crate::bench::{load_suite, run_benchmark, write_outputs, BenchConfig, SCENARIO_EXT};
use crate::error::{parse_list, read_text, write_text, CliError, Result};
use crate::formats::camera::{load_camera, load_embodiment};
use crate::formats::config::{load_limits, load_planner_config, load_scan_config, RunConfig};
use crate::formats::records::{
    load_annotations, load_episode, load_scale, outcome_name, parse_confidence_line, parse_confidence_stream,
    write_calibration, write_episode, ConfidenceRecord, ScoredEpisode,
};
use crate::formats::scan::{load_scan, write_scan};
use crate::formats::scenario::{load_scenario, write_scenario};
use crate::kv::num;
use crate::pfm::load_pfm;
use crate::plot::trajectory_svg;

#[derive(Debug, Parser)]
#[command(name = "visnav", version, about = "Embodiment-aware visual local planning tools")]
pub struct Cli {
    /// Worker threads for batch commands (results do not depend on it)
    #[arg(long, global = true, default_value_t = 1)]
    pub jobs: usize,
    /// Seed for every stochastic step
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Progress and diagnostics on standard error
    #[arg(long, short, global = true)]
    pub verbose: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Recover (s1, s2) from marker annotations on relative depth images
    Calibrate(CalibrateArgs),
    /// Convert one depth image into a virtual laser scan
    Scan(ScanArgs),
    /// One planning step on a scan; prints "v omega"
    Plan(PlanArgs),
    /// Run one closed-loop episode
    Simulate(SimulateArgs),
    /// Write a suite of random cylinder-field scenarios
    GenScenarios(GenArgs),
    /// Evaluate an embodiment over a scenario suite
    Benchmark(BenchArgs),
    /// MAE and RMSE between two metric depth images
    EvalDepth(EvalDepthArgs),
    /// Turn region confidences into a world-frame waypoint
    VlnStep(VlnArgs),
    /// Draw an episode result as SVG
    Plot(PlotArgs),
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    /// Directory holding `<image_id>.pfm` relative inverse depth images
    #[arg(long)]
    pub images: PathBuf,
    #[arg(long)]
    pub annotations: PathBuf,
    #[arg(long)]
    pub camera: PathBuf,
    #[arg(long, default_value_t = DEFAULT_LAMBDA)]
    pub lambda: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    /// Relative inverse depth when `--calib` is given, metric depth otherwise
    #[arg(long)]
    pub depth: PathBuf,
    #[arg(long)]
    pub camera: PathBuf,
    #[arg(long)]
    pub calib: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    #[arg(long)]
    pub scan: PathBuf,
    /// Goal in the robot frame, `x,y` (y forward)
    #[arg(long)]
    pub goal: String,
    /// `l_front,l_rear,width[,height]` in meters
    #[arg(long)]
    pub body: String,
    #[arg(long)]
    pub limits: PathBuf,
    /// Planner settings file
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Current `v,omega`
    #[arg(long, default_value = "0,0")]
    pub velocity: String,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long)]
    pub embodiment: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Episode result file
    #[arg(long)]
    pub out: PathBuf,
    /// Also write an SVG plot here
    #[arg(long)]
    pub plot: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, default_value_t = 10)]
    pub count: usize,
    /// Expected obstacles per square meter
    #[arg(long, default_value_t = 0.4)]
    pub density: f64,
    /// Reject worlds whose reference path exceeds this multiple of the
    /// straight line
    #[arg(long)]
    pub max_path_ratio: Option<f64>,
    /// Body used for the feasibility check (defaults to the `sim` preset)
    #[arg(long)]
    pub embodiment: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub suite: PathBuf,
    #[arg(long)]
    pub embodiment: PathBuf,
    /// Run settings file
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides the embodiment's speed limit
    #[arg(long)]
    pub vmax: Option<f64>,
    #[arg(long, default_value_t = 2)]
    pub trials: usize,
    #[arg(long)]
    pub out: PathBuf,
    /// Write an SVG per episode under `plots/`
    #[arg(long)]
    pub plots: bool,
}

#[derive(Debug, Args)]
pub struct EvalDepthArgs {
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long)]
    pub gt: PathBuf,
}

#[derive(Debug, Args)]
pub struct VlnArgs {
    /// A `t s_left s_center s_right` line, or a file of such lines
    #[arg(long)]
    pub conf: String,
    /// Robot pose `x,y,heading` when the confidences were taken
    #[arg(long, allow_hyphen_values = true)]
    pub pose: String,
    /// Consecutive confident center frames needed for arrival
    #[arg(long, default_value_t = 5)]
    pub frames: u32,
    /// Confidence a center frame must exceed to count toward arrival
    #[arg(long, default_value_t = 0.8)]
    pub threshold: f64,
    /// Left and right region centers at ± this many degrees
    #[arg(long, default_value_t = 25.0)]
    pub region_deg: f64,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    /// Episode result file
    #[arg(long)]
    pub result: PathBuf,
    #[arg(long)]
    pub embodiment: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

/// Parses `argv`, runs the command and returns the process exit code.
pub fn run(argv: impl IntoIterator<Item = String>, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                _ if !e.use_stderr() => 0,
                clap::error::ErrorKind::ValueValidation => 5,
                _ => 2,
            };
            let text = e.render().to_string();
            let _ = if code == 0 {
                write!(stdout, "{text}")
            } else {
                write!(stderr, "{text}")
            };
            return code;
        }
    };
    match dispatch(&cli, stdout, stderr) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

fn out_err(e: std::io::Error) -> CliError {
    CliError::io(Path::new("<stdout>"), e)
}

pub fn dispatch(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::Calibrate(a) => cmd_calibrate(cli, a, out, err),
        Command::Scan(a) => cmd_scan(cli, a, err),
        Command::Plan(a) => cmd_plan(a, out),
        Command::Simulate(a) => cmd_simulate(cli, a, out),
        Command::GenScenarios(a) => cmd_gen(cli, a, out, err),
        Command::Benchmark(a) => cmd_benchmark(cli, a, out, err),
        Command::EvalDepth(a) => cmd_eval_depth(a, out),
        Command::VlnStep(a) => cmd_vln(a, out),
        Command::Plot(a) => cmd_plot(a),
    }
}

fn cmd_calibrate(cli: &Cli, a: &CalibrateArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let rig = load_camera(&a.camera)?;
    let markers = load_annotations(&a.annotations)?;
    // Group by image in order of first appearance.
    let mut order: Vec<String> = Vec::new();
    let mut by_image: BTreeMap<String, Vec<_>> = BTreeMap::new();
    for m in markers {
        if !by_image.contains_key(&m.image_id) {
            order.push(m.image_id.clone());
        }
        by_image.entry(m.image_id.clone()).or_default().push(m);
    }
    let mut images = Vec::with_capacity(order.len());
    for id in &order {
        let depth = load_pfm(&a.images.join(format!("{id}.pfm")), DepthKind::RelativeInverse)?;
        images.push(CalibrationImage {
            depth,
            markers: by_image.remove(id).unwrap_or_default(),
        });
    }
    let result = calibrate(&images, &rig.intrinsics, a.lambda)?;
    write_text(&a.out, &write_calibration(&result))?;
    writeln!(
        out,
        "s1 = {}\ns2 = {}\nresidual_rms = {}\nsample_count = {}",
        num(result.s1),
        num(result.s2),
        num(result.residual_rms),
        result.sample_count
    )
    .map_err(out_err)?;
    if cli.verbose || !result.warnings.is_empty() {
        for w in &result.warnings {
            let _ = writeln!(err, "warning: {w:?}");
        }
    }
    Ok(())
}

fn cmd_scan(cli: &Cli, a: &ScanArgs, err: &mut dyn Write) -> Result<()> {
    let rig = load_camera(&a.camera)?;
    let scale = a.calib.as_deref().map(load_scale).transpose()?;
    let cfg = match &a.config {
        Some(p) => load_scan_config(p)?,
        None => visnav_core::scan::ScanConfig::for_robot_height(1.0),
    };
    let metric = match scale {
        Some(s) => apply_scale_correction(&load_pfm(&a.depth, DepthKind::RelativeInverse)?, s.s1, s.s2)?,
        None => load_pfm(&a.depth, DepthKind::Metric)?,
    };
    let (scan, diag) = metric_depth_to_scan(&metric, &rig.intrinsics, &rig.extrinsics, &cfg)?;
    write_text(&a.out, &write_scan(&scan))?;
    if cli.verbose {
        let hit = diag.points_per_bin.iter().filter(|n| **n > 0).count();
        let _ = writeln!(err, "{hit} of {} bins received points", cfg.num_bins);
    }
    Ok(())
}

fn parse_body(text: &str) -> Result<RobotBody> {
    let v = parse_list(text, "--body")?;
    match v.as_slice() {
        [f, r, w] => Ok(RobotBody::new(*f, *r, *w, 1.0)?),
        [f, r, w, h] => Ok(RobotBody::new(*f, *r, *w, *h)?),
        _ => Err(CliError::Usage("--body takes l_front,l_rear,width[,height]".into())),
    }
}

fn parse_pair(text: &str, flag: &str) -> Result<(f64, f64)> {
    match parse_list(text, flag)?.as_slice() {
        [x, y] => Ok((*x, *y)),
        _ => Err(CliError::Usage(format!("{flag} takes two comma-separated numbers"))),
    }
}

fn cmd_plan(a: &PlanArgs, out: &mut dyn Write) -> Result<()> {
    let scan = load_scan(&a.scan)?;
    let limits = load_limits(&a.limits)?;
    let cfg = match &a.config {
        Some(p) => load_planner_config(p)?,
        None => Default::default(),
    };
    let (gx, gy) = parse_pair(&a.goal, "--goal")?;
    let (v, w) = parse_pair(&a.velocity, "--velocity")?;
    let obs = Observation {
        scan,
        goal: Vec2::new(gx, gy),
        velocity: VelocityCommand::new(v, w),
        limits,
        body: parse_body(&a.body)?,
    };
    let cmd = plan(&obs, &cfg);
    writeln!(out, "{} {}", num(cmd.v), num(cmd.omega)).map_err(out_err)
}

fn load_run_config(path: Option<&Path>, seed: Option<u64>) -> Result<RunConfig> {
    let mut rc = match path {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = seed {
        rc.seed = s;
        if let Some(d) = rc.distortion.as_mut() {
            d.seed = s;
        }
    }
    Ok(rc)
}

fn cmd_simulate(cli: &Cli, a: &SimulateArgs, out: &mut dyn Write) -> Result<()> {
    let world = load_scenario(&a.scenario)?;
    let profile = load_embodiment(&a.embodiment)?;
    let rc = load_run_config(a.config.as_deref(), cli.seed)?;
    let len = dijkstra_path_length(&world, &profile.body, visnav_core::sim::grid::DEFAULT_RESOLUTION)?;
    let t_opt = if len.is_finite() {
        Some(optimal_time(len.max(1e-9), profile.limits.v_max)?)
    } else {
        None
    };
    let timeout_ref = match (t_opt, rc.timeout_s) {
        (Some(t), _) => t,
        (None, Some(_)) => 1.0,
        (None, None) => {
            return Err(CliError::Usage(
                "goal unreachable for this body; set [episode] timeout_s to simulate anyway".into(),
            ))
        }
    };
    let scan_cfg = rc.scan_config(&profile)?;
    let planner = SamplingPlanner::new(rc.planner_config()?)?;
    let ep_cfg = rc.episode_config(profile.clone(), timeout_ref, rc.seed);
    let result = run_episode(&world, &ep_cfg, &planner, &scan_cfg)?;
    let t_opt_val = t_opt.unwrap_or(f64::INFINITY);
    let metric = match t_opt {
        Some(t) => metric_score(result.outcome == Outcome::Success, result.t_act, t)?,
        None => 0.0,
    };
    let scored = ScoredEpisode {
        result,
        t_opt: t_opt_val,
        metric,
    };
    write_text(&a.out, &write_episode(&scored))?;
    if let Some(p) = &a.plot {
        write_text(p, &trajectory_svg(&world, &scored.result, &profile.body))?;
    }
    writeln!(
        out,
        "outcome = {}\nt_act = {}\nt_opt = {}\nmetric = {}",
        outcome_name(scored.result.outcome),
        num(scored.result.t_act),
        num(scored.t_opt),
        num(scored.metric)
    )
    .map_err(out_err)
}

fn cmd_gen(cli: &Cli, a: &GenArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let body = match &a.embodiment {
        Some(p) => load_embodiment(p)?.body,
        None => EmbodimentProfile::preset("sim").expect("built-in preset").body,
    };
    let params = ScenarioParams {
        density: a.density,
        max_path_ratio: a.max_path_ratio,
        ..Default::default()
    };
    params.validate()?;
    let seed = cli.seed.unwrap_or(0);
    let width = a.count.saturating_sub(1).to_string().len().max(3);
    // Generate everything before writing so failures leave no partial suite.
    let mut worlds = Vec::with_capacity(a.count);
    for i in 0..a.count {
        let (w, len) = generate_scenario(seed.wrapping_add(i as u64), &params, &body)?;
        if cli.verbose {
            let _ = writeln!(err, "scenario {i}: {} obstacles, reference path {len:.3} m", w.obstacles.len());
        }
        worlds.push(w);
    }
    for (i, w) in worlds.iter().enumerate() {
        let name = format!("scenario_{i:0width$}.{SCENARIO_EXT}");
        write_text(&a.out.join(name), &write_scenario(w))?;
    }
    writeln!(out, "wrote {} scenarios to {}", a.count, a.out.display()).map_err(out_err)
}

fn cmd_benchmark(cli: &Cli, a: &BenchArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let suite = load_suite(&a.suite)?;
    let mut profile = load_embodiment(&a.embodiment)?;
    if let Some(v) = a.vmax {
        profile.limits.v_max = v;
        profile.validate()?;
    }
    let cfg = BenchConfig {
        run: load_run_config(a.config.as_deref(), cli.seed)?,
        trials: a.trials,
        seed: cli.seed.unwrap_or(0),
        jobs: cli.jobs,
        ..Default::default()
    };
    if cli.verbose {
        let _ = writeln!(
            err,
            "{} scenarios x {} trials on {} worker(s)",
            suite.scenarios.len(),
            a.trials,
            cli.jobs
        );
    }
    let result = run_benchmark(&suite, &profile, &cfg)?;
    write_outputs(&result, &suite, &profile, &a.out, a.plots)?;
    let g = &result.report.aggregate;
    writeln!(
        out,
        "metric = {:.4}\nsr = {:.4}\ncr = {:.4}\ntr = {:.4}\nepisodes = {}",
        g.metric, g.success_rate, g.collision_rate, g.timeout_rate, g.episodes
    )
    .map_err(out_err)
}

fn cmd_eval_depth(a: &EvalDepthArgs, out: &mut dyn Write) -> Result<()> {
    let pred = load_pfm(&a.pred, DepthKind::Metric)?;
    let gt = load_pfm(&a.gt, DepthKind::Metric)?;
    let e = eval_depth(&pred, &gt)?;
    writeln!(out, "mae = {}\nrmse = {}\ncount = {}", num(e.mae), num(e.rmse), e.count).map_err(out_err)
}

fn cmd_vln(a: &VlnArgs, out: &mut dyn Write) -> Result<()> {
    let pose = match parse_list(&a.pose, "--pose")?.as_slice() {
        [x, y, h] => Pose2D::new(*x, *y, *h),
        _ => return Err(CliError::Usage("--pose takes x,y,heading".into())),
    };
    let path = Path::new(&a.conf);
    let records: Vec<ConfidenceRecord> = if path.is_file() {
        parse_confidence_stream(path, &read_text(path)?)?
    } else {
        vec![parse_confidence_line(&a.conf, "--conf")?]
    };
    if !(a.region_deg > 0.0 && a.region_deg < 90.0) {
        return Err(CliError::Usage("--region-deg must lie in (0, 90)".into()));
    }
    let phi = a.region_deg.to_radians();
    let mut det = ArrivalDetector::new(a.frames, a.threshold);
    for r in records {
        let c = r.confidence;
        let rc = RegionConfidence::with_angles(c.left, c.center, c.right, phi, -phi)?;
        let cmd = command_from_confidence(&rc);
        let wp = to_world(&cmd, &pose);
        let arrived = det.update(&rc);
        writeln!(
            out,
            "t = {} x = {} y = {} d_cmd = {} theta_cmd = {} arrived = {}",
            num(r.t),
            num(wp.x),
            num(wp.y),
            num(cmd.distance),
            num(cmd.theta),
            arrived
        )
        .map_err(out_err)?;
    }
    Ok(())
}

fn cmd_plot(a: &PlotArgs) -> Result<()> {
    let world = load_scenario(&a.scenario)?;
    let ep = load_episode(&a.result)?;
    let profile = load_embodiment(&a.embodiment)?;
    write_text(&a.out, &trajectory_svg(&world, &ep.result, &profile.body))
}

/// Convenience for tests: run with captured output.
pub fn run_captured(args: &[&str]) -> (i32, String, String) {
    let mut o = Vec::new();
    let mut e = Vec::new();
    let argv = std::iter::once("visnav".to_string()).chain(args.iter().map(|s| s.to_string()));
    let code = run(argv, &mut o, &mut e);
    (
        code,
        String::from_utf8_lossy(&o).into_owned(),
        String::from_utf8_lossy(&e).into_owned(),
    )
}
