//! Batch evaluation over a directory of scenarios.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use visnav_core::embodiment::EmbodimentProfile;
use visnav_core::metrics::{aggregate, metric_score, optimal_time, Aggregate, EpisodeScore, Outcome};
use visnav_core::planner::SamplingPlanner;
use visnav_core::sim::{dijkstra_path_length, run_episode, EpisodeResult, World};

use crate::error::{write_text, CliError, Result};
use crate::formats::config::RunConfig;
use crate::formats::records::{outcome_name, write_episode, ScoredEpisode};
use crate::formats::scenario::load_scenario;
use crate::kv::num;
use crate::plot::trajectory_svg;

pub const SCENARIO_EXT: &str = "scn";

/// Scenarios keyed by file stem, in name order.
#[derive(Debug, Clone, PartialEq)]
pub struct Suite {
    pub scenarios: Vec<(String, World)>,
}

pub fn load_suite(dir: &Path) -> Result<Suite> {
    let entries = std::fs::read_dir(dir).map_err(|e| CliError::io(dir, e))?;
    let mut paths: Vec<PathBuf> = Vec::new();
    for entry in entries {
        let p = entry.map_err(|e| CliError::io(dir, e))?.path();
        if p.extension().is_some_and(|e| e == SCENARIO_EXT) {
            paths.push(p);
        }
    }
    paths.sort();
    if paths.is_empty() {
        return Err(CliError::format(dir, format!("no *.{SCENARIO_EXT} scenario files")));
    }
    let scenarios = paths
        .iter()
        .map(|p| {
            let id = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            load_scenario(p).map(|w| (id, w))
        })
        .collect::<Result<_>>()?;
    Ok(Suite { scenarios })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub run: RunConfig,
    pub trials: usize,
    pub seed: u64,
    /// Worker threads; results do not depend on it.
    pub jobs: usize,
    pub grid_resolution: f64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            run: RunConfig::default(),
            trials: 2,
            seed: 0,
            jobs: 1,
            grid_resolution: visnav_core::sim::grid::DEFAULT_RESOLUTION,
        }
    }
}

/// One evaluated episode.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRow {
    pub scenario: String,
    pub trial: usize,
    pub outcome: Outcome,
    pub t_act: f64,
    pub t_opt: f64,
    pub metric: f64,
    pub path_length: f64,
    pub min_clearance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub rows: Vec<EpisodeRow>,
    pub aggregate: Aggregate,
    pub v_max: f64,
    pub seed: u64,
    pub trials: usize,
    pub embodiment: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchOutput {
    pub report: MetricsReport,
    /// Same order as `report.rows`.
    pub episodes: Vec<EpisodeResult>,
}

/// splitmix64 over a running state; gives each (scenario, trial) its own
/// stream regardless of scheduling.
pub fn episode_seed(base: u64, scenario: usize, trial: usize) -> u64 {
    let mut x = base;
    for v in [scenario as u64, trial as u64] {
        x = x.wrapping_add(0x9E37_79B9_7F4A_7C15).wrapping_add(v);
        x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        x ^= x >> 31;
    }
    x
}

/// Reference path length and `T_opt` for every scenario.
pub fn reference_times(suite: &Suite, profile: &EmbodimentProfile, resolution: f64) -> Result<Vec<f64>> {
    suite
        .scenarios
        .iter()
        .map(|(id, w)| {
            let len = dijkstra_path_length(w, &profile.body, resolution)?;
            if !len.is_finite() {
                return Err(CliError::Usage(format!(
                    "scenario {id}: goal unreachable for this body; no reference time"
                )));
            }
            Ok(optimal_time(len.max(1e-9), profile.limits.v_max)?)
        })
        .collect()
}

pub fn run_benchmark(suite: &Suite, profile: &EmbodimentProfile, cfg: &BenchConfig) -> Result<BenchOutput> {
    if cfg.trials == 0 {
        return Err(CliError::Usage("need at least one trial".into()));
    }
    profile.validate()?;
    let scan_cfg = cfg.run.scan_config(profile)?;
    let planner = SamplingPlanner::new(cfg.run.planner_config()?)?;
    let t_opts = reference_times(suite, profile, cfg.grid_resolution)?;
    let jobs: Vec<(usize, usize)> = (0..suite.scenarios.len())
        .flat_map(|s| (0..cfg.trials).map(move |t| (s, t)))
        .collect();
    let run_one = |&(s, trial): &(usize, usize)| -> Result<(EpisodeRow, EpisodeResult)> {
        let (id, world) = &suite.scenarios[s];
        let t_opt = t_opts[s];
        let ep_cfg = cfg
            .run
            .episode_config(profile.clone(), t_opt, episode_seed(cfg.seed, s, trial));
        let r = run_episode(world, &ep_cfg, &planner, &scan_cfg)?;
        let metric = metric_score(r.outcome == Outcome::Success, r.t_act, t_opt)?;
        Ok((
            EpisodeRow {
                scenario: id.clone(),
                trial,
                outcome: r.outcome,
                t_act: r.t_act,
                t_opt,
                metric,
                path_length: r.path_length,
                min_clearance: r.min_clearance,
            },
            r,
        ))
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs.max(1))
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start worker pool: {e}")))?;
    let results: Vec<Result<(EpisodeRow, EpisodeResult)>> = pool.install(|| jobs.par_iter().map(run_one).collect());
    let mut rows = Vec::with_capacity(results.len());
    let mut episodes = Vec::with_capacity(results.len());
    for r in results {
        let (row, ep) = r?;
        rows.push(row);
        episodes.push(ep);
    }
    let scores: Vec<EpisodeScore> = rows
        .iter()
        .map(|r| EpisodeScore {
            outcome: r.outcome,
            t_act: r.t_act,
            t_opt: r.t_opt,
        })
        .collect();
    Ok(BenchOutput {
        report: MetricsReport {
            aggregate: aggregate(&scores)?,
            rows,
            v_max: profile.limits.v_max,
            seed: cfg.seed,
            trials: cfg.trials,
            embodiment: profile.name.clone(),
        },
        episodes,
    })
}

const CSV_HEADER: [&str; 10] = [
    "scenario",
    "trial",
    "success",
    "collision",
    "timeout",
    "t_act",
    "t_opt",
    "metric",
    "path_length",
    "min_clearance",
];

/// Id used for the aggregate footer row.
pub const AGGREGATE_ROW: &str = "aggregate";

/// Per-episode rows, then a footer whose flag columns hold SR, CR and TR
/// and whose metric column holds the mean metric.
pub fn results_csv(report: &MetricsReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| CliError::Usage(format!("csv: {e}"));
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for r in &report.rows {
        w.write_record([
            r.scenario.clone(),
            r.trial.to_string(),
            r.outcome.success().to_string(),
            r.outcome.collision().to_string(),
            r.outcome.timeout().to_string(),
            num(r.t_act),
            num(r.t_opt),
            num(r.metric),
            num(r.path_length),
            num(r.min_clearance),
        ])
        .map_err(csv_err)?;
    }
    let a = &report.aggregate;
    w.write_record([
        AGGREGATE_ROW.to_string(),
        a.episodes.to_string(),
        num(a.success_rate),
        num(a.collision_rate),
        num(a.timeout_rate),
        String::new(),
        String::new(),
        num(a.metric),
        String::new(),
        String::new(),
    ])
    .map_err(csv_err)?;
    let bytes = w.into_inner().map_err(|e| CliError::Usage(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Parses `results.csv` back into rows and the footer aggregate.
pub fn parse_results_csv(path: &Path, text: &str) -> Result<(Vec<EpisodeRow>, Aggregate)> {
    let bad = |msg: String| CliError::format(path, msg);
    let mut rd = csv::Reader::from_reader(text.as_bytes());
    let header = rd.headers().map_err(|e| bad(e.to_string()))?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(bad(format!("unexpected header {header:?}")));
    }
    let f = |s: &str| s.parse::<f64>().map_err(|_| bad(format!("bad number {s:?}")));
    let u = |s: &str| s.parse::<usize>().map_err(|_| bad(format!("bad count {s:?}")));
    let mut rows = Vec::new();
    let mut agg = None;
    for rec in rd.records() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        if agg.is_some() {
            return Err(bad("rows after the aggregate footer".into()));
        }
        if &rec[0] == AGGREGATE_ROW {
            agg = Some(Aggregate {
                episodes: u(&rec[1])?,
                success_rate: f(&rec[2])?,
                collision_rate: f(&rec[3])?,
                timeout_rate: f(&rec[4])?,
                metric: f(&rec[7])?,
            });
            continue;
        }
        let outcome = match (&rec[2], &rec[3], &rec[4]) {
            ("1", "0", "0") => Outcome::Success,
            ("0", "1", "0") => Outcome::Collision,
            ("0", "0", "1") => Outcome::Timeout,
            other => return Err(bad(format!("flags {other:?} are not exactly one terminal state"))),
        };
        rows.push(EpisodeRow {
            scenario: rec[0].to_string(),
            trial: u(&rec[1])?,
            outcome,
            t_act: f(&rec[5])?,
            t_opt: f(&rec[6])?,
            metric: f(&rec[7])?,
            path_length: f(&rec[8])?,
            min_clearance: f(&rec[9])?,
        });
    }
    Ok((rows, agg.ok_or_else(|| bad("missing aggregate footer".into()))?))
}

fn pct(x: f64) -> String {
    format!("{:.1}%", 100.0 * x)
}

/// Markdown summary: the aggregate table, run settings and per-episode rows.
pub fn report_markdown(report: &MetricsReport) -> String {
    let a = &report.aggregate;
    let mut s = String::from("# Benchmark report\n\n");
    s.push_str("| Metric (↑) | SR (↑) | CR (↓) | TR (↓) |\n|---:|---:|---:|---:|\n");
    s.push_str(&format!(
        "| {:.4} | {} | {} | {} |\n\n",
        a.metric,
        pct(a.success_rate),
        pct(a.collision_rate),
        pct(a.timeout_rate)
    ));
    s.push_str(&format!(
        "- embodiment: {}\n- v_max: {} m/s\n- seed: {}\n- trials per scenario: {}\n- episodes: {}\n\n",
        report.embodiment,
        num(report.v_max),
        report.seed,
        report.trials,
        a.episodes
    ));
    s.push_str("| Scenario | Trial | Outcome | T_act (s) | T_opt (s) | Metric |\n|---|---:|---|---:|---:|---:|\n");
    for r in &report.rows {
        s.push_str(&format!(
            "| {} | {} | {} | {:.2} | {:.2} | {:.4} |\n",
            r.scenario,
            r.trial,
            outcome_name(r.outcome),
            r.t_act,
            r.t_opt,
            r.metric
        ));
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Markdown,
}

/// Writes the requested report files into `dir`; returns their paths.
pub fn emit_report(report: &MetricsReport, formats: &[ReportFormat], dir: &Path) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    for f in formats {
        let (name, text) = match f {
            ReportFormat::Csv => ("results.csv", results_csv(report)?),
            ReportFormat::Markdown => ("report.md", report_markdown(report)),
        };
        let p = dir.join(name);
        write_text(&p, &text)?;
        written.push(p);
    }
    Ok(written)
}

pub fn trajectory_file_name(row: &EpisodeRow) -> String {
    format!("{}_t{}", row.scenario, row.trial)
}

/// Writes both reports, one trajectory file per episode under
/// `trajectories/`, and optionally one SVG per episode under `plots/`.
pub fn write_outputs(out: &BenchOutput, suite: &Suite, profile: &EmbodimentProfile, dir: &Path, plots: bool) -> Result<()> {
    emit_report(&out.report, &[ReportFormat::Csv, ReportFormat::Markdown], dir)?;
    for (row, ep) in out.report.rows.iter().zip(&out.episodes) {
        let name = trajectory_file_name(row);
        let scored = ScoredEpisode {
            result: ep.clone(),
            t_opt: row.t_opt,
            metric: row.metric,
        };
        write_text(&dir.join("trajectories").join(format!("{name}.txt")), &write_episode(&scored))?;
        if plots {
            let world = &suite
                .scenarios
                .iter()
                .find(|(id, _)| *id == row.scenario)
                .expect("row comes from the suite")
                .1;
            write_text(
                &dir.join("plots").join(format!("{name}.svg")),
                &trajectory_svg(world, ep, &profile.body),
            )?;
        }
    }
    Ok(())
}
