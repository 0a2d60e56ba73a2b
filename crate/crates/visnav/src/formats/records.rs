//! Calibration output, marker annotations, confidence streams and episode
//! results.

use std::path::Path;

use visnav_core::calibration::{CalibrationResult, CalibrationWarning};
use visnav_core::embodiment::ScaleParams;
use visnav_core::metrics::Outcome;
use visnav_core::pnp::MarkerObservation;
use visnav_core::sim::EpisodeResult;
use visnav_core::vln::RegionConfidence;
use visnav_core::{Pose2D, Vec2};

use crate::error::{parse_f64, read_text, CliError, Result};
use crate::kv::{num, KvDoc};

const CALIB_KEYS: &[&str] = &[
    "s1",
    "s2",
    "lambda",
    "residual_rms",
    "condition_number",
    "sample_count",
    "depth_spread_ratio",
];

fn describe_warning(w: &CalibrationWarning) -> String {
    match w {
        CalibrationWarning::NarrowDepthSpread { ratio } => {
            format!("narrow depth spread: max/min = {ratio:.3}; add nearer and farther markers")
        }
        CalibrationWarning::IllConditioned { condition_number } => {
            format!("ill-conditioned system: condition number {condition_number:.3e}")
        }
        CalibrationWarning::NonPositiveScale { s1 } => format!("non-positive scale s1 = {s1}"),
        CalibrationWarning::MarkerSkipped { image, marker, reason } => {
            format!("image {image} marker {marker} skipped: {reason}")
        }
        CalibrationWarning::SampleSkipped {
            image,
            marker,
            corner,
            reason,
        } => format!("image {image} marker {marker} corner {corner} skipped: {reason}"),
        CalibrationWarning::SampleFallback { image, marker, corner } => {
            format!("image {image} marker {marker} corner {corner} sampled from nearest valid pixel")
        }
    }
}

pub fn write_calibration(r: &CalibrationResult) -> String {
    let mut s = format!(
        "s1 = {}\ns2 = {}\nlambda = {}\nresidual_rms = {}\ncondition_number = {}\nsample_count = {}\ndepth_spread_ratio = {}\n",
        num(r.s1),
        num(r.s2),
        num(r.lambda),
        num(r.residual_rms),
        num(r.condition_number),
        r.sample_count,
        num(r.depth_spread_ratio),
    );
    for w in &r.warnings {
        s.push_str(&format!("warning = {}\n", describe_warning(w).replace('#', "no.")));
    }
    s
}

pub fn parse_scale(doc: &KvDoc) -> Result<ScaleParams> {
    doc.check_keys(CALIB_KEYS, &["warning"])?;
    Ok(ScaleParams {
        s1: doc.req_f64("s1")?,
        s2: doc.req_f64("s2")?,
    })
}

/// Reads `(s1, s2)` from a calibration output file.
pub fn load_scale(path: &Path) -> Result<ScaleParams> {
    parse_scale(&KvDoc::load(path)?)
}

/// One marker per line: `image_id marker_id size u1 v1 u2 v2 u3 v3 u4 v4`.
pub fn parse_annotations(path: &Path, text: &str) -> Result<Vec<MarkerObservation>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let ctx = format!("{} line {}", path.display(), i + 1);
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 11 {
            return Err(CliError::format(
                path,
                format!("line {}: expected 11 fields (image_id marker_id size u1 v1 … u4 v4), got {}", i + 1, f.len()),
            ));
        }
        let marker_id = f[1].parse::<u32>().map_err(|_| CliError::Number {
            text: f[1].to_string(),
            context: ctx.clone(),
        })?;
        let size = parse_f64(f[2], &ctx)?;
        let mut c = [Vec2::new(0.0, 0.0); 4];
        for (k, corner) in c.iter_mut().enumerate() {
            *corner = Vec2::new(parse_f64(f[3 + 2 * k], &ctx)?, parse_f64(f[4 + 2 * k], &ctx)?);
        }
        out.push(MarkerObservation {
            image_id: f[0].to_string(),
            marker_id,
            size,
            corners: c,
        });
    }
    Ok(out)
}

pub fn write_annotations(obs: &[MarkerObservation]) -> String {
    let mut s = String::new();
    for o in obs {
        s.push_str(&format!("{} {} {}", o.image_id, o.marker_id, num(o.size)));
        for c in &o.corners {
            s.push_str(&format!(" {} {}", num(c.x), num(c.y)));
        }
        s.push('\n');
    }
    s
}

pub fn load_annotations(path: &Path) -> Result<Vec<MarkerObservation>> {
    parse_annotations(path, &read_text(path)?)
}

/// A timestamped confidence record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfidenceRecord {
    pub t: f64,
    pub confidence: RegionConfidence,
}

/// Parses one `t s_left s_center s_right` line.
pub fn parse_confidence_line(line: &str, context: &str) -> Result<ConfidenceRecord> {
    let f: Vec<&str> = line.split_whitespace().collect();
    if f.len() != 4 {
        return Err(CliError::Usage(format!(
            "{context}: expected `t s_left s_center s_right`, got {line:?}"
        )));
    }
    let v = f
        .iter()
        .map(|t| parse_f64(t, context))
        .collect::<Result<Vec<_>>>()?;
    Ok(ConfidenceRecord {
        t: v[0],
        confidence: RegionConfidence::new(v[1], v[2], v[3])?,
    })
}

pub fn parse_confidence_stream(path: &Path, text: &str) -> Result<Vec<ConfidenceRecord>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let ctx = format!("{} line {}", path.display(), i + 1);
        out.push(parse_confidence_line(line, &ctx).map_err(|e| match e {
            CliError::Usage(msg) => CliError::format(path, msg),
            other => other,
        })?);
    }
    Ok(out)
}

pub fn outcome_name(o: Outcome) -> &'static str {
    match o {
        Outcome::Success => "success",
        Outcome::Collision => "collision",
        Outcome::Timeout => "timeout",
    }
}

pub fn parse_outcome(s: &str) -> Option<Outcome> {
    match s {
        "success" => Some(Outcome::Success),
        "collision" => Some(Outcome::Collision),
        "timeout" => Some(Outcome::Timeout),
        _ => None,
    }
}

/// Episode result with the optimal time and metric it was scored against.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredEpisode {
    pub result: EpisodeResult,
    pub t_opt: f64,
    pub metric: f64,
}

pub fn write_episode(e: &ScoredEpisode) -> String {
    let r = &e.result;
    let mut s = format!(
        "outcome = {}\nt_act = {}\nt_opt = {}\nmetric = {}\npath_length = {}\nmin_clearance = {}\nsteps = {}\n",
        outcome_name(r.outcome),
        num(r.t_act),
        num(e.t_opt),
        num(e.metric),
        num(r.path_length),
        num(r.min_clearance),
        r.steps,
    );
    for p in &r.trajectory {
        s.push_str(&format!("pose = [{}, {}, {}]\n", num(p.x), num(p.y), num(p.heading)));
    }
    s
}

pub fn parse_episode(doc: &KvDoc) -> Result<ScoredEpisode> {
    doc.check_keys(
        &["outcome", "t_act", "t_opt", "metric", "path_length", "min_clearance", "steps"],
        &["pose"],
    )?;
    let outcome_text = doc.str("outcome").ok_or_else(|| doc.err("missing key `outcome`"))?;
    let outcome = parse_outcome(outcome_text).ok_or_else(|| doc.err(format!("unknown outcome {outcome_text:?}")))?;
    let mut trajectory = Vec::new();
    for p in doc.all("pose") {
        let one = KvDoc::parse(doc.path(), &format!("pose = {p}"))?;
        let v = one.req_list("pose", 3)?;
        trajectory.push(Pose2D::new(v[0], v[1], v[2]));
    }
    Ok(ScoredEpisode {
        result: EpisodeResult {
            outcome,
            t_act: doc.req_f64("t_act")?,
            path_length: doc.req_f64("path_length")?,
            trajectory,
            min_clearance: doc.req_f64("min_clearance")?,
            steps: doc.usize("steps")?.ok_or_else(|| doc.err("missing key `steps`"))?,
        },
        t_opt: doc.req_f64("t_opt")?,
        metric: doc.req_f64("metric")?,
    })
}

pub fn load_episode(path: &Path) -> Result<ScoredEpisode> {
    parse_episode(&KvDoc::load(path)?)
}
