//! Camera model and embodiment files.

use std::path::{Path, PathBuf};

use visnav_core::embodiment::{CameraRig, EmbodimentProfile};
use visnav_core::geometry::{rodrigues, rodrigues_inv};
use visnav_core::{CameraExtrinsics, CameraIntrinsics, Distortion, DynamicLimits, RobotBody, Vec3};

use super::records::load_scale;
use crate::error::Result;
use crate::kv::{num, KvDoc};

const CAMERA_KEYS: &[&str] = &[
    "name",
    "fx",
    "fy",
    "cx",
    "cy",
    "width",
    "height",
    "dist",
    "ext_rvec",
    "ext_t",
    "pitch_deg",
    "yaw_deg",
];

pub fn parse_camera(doc: &KvDoc) -> Result<CameraRig> {
    doc.check_keys(CAMERA_KEYS, &[])?;
    let dist = match doc.list("dist")? {
        None => Distortion::default(),
        Some(d) if d.len() == 4 || d.len() == 5 => Distortion {
            k1: d[0],
            k2: d[1],
            p1: d[2],
            p2: d[3],
            k3: d.get(4).copied().unwrap_or(0.0),
        },
        Some(d) => return Err(doc.err(format!("`dist` needs 4 or 5 values, got {}", d.len()))),
    };
    let size = |key: &str| -> Result<usize> { doc.usize(key)?.ok_or_else(|| doc.err(format!("missing key `{key}`"))) };
    let intr = CameraIntrinsics::new(
        doc.req_f64("fx")?,
        doc.req_f64("fy")?,
        doc.req_f64("cx")?,
        doc.req_f64("cy")?,
        size("width")?,
        size("height")?,
        dist,
    )?;
    let t = doc.req_list("ext_t", 3)?;
    let ext = if doc.has("ext_rvec") {
        if doc.has("pitch_deg") || doc.has("yaw_deg") {
            return Err(doc.err("give either `ext_rvec` or `pitch_deg`/`yaw_deg`, not both"));
        }
        let r = doc.req_list("ext_rvec", 3)?;
        CameraExtrinsics::new(rodrigues(Vec3::new(r[0], r[1], r[2])), Vec3::new(t[0], t[1], t[2]))?
    } else {
        let pitch = doc.f64_or("pitch_deg", 0.0)?.to_radians();
        let yaw = doc.f64_or("yaw_deg", 0.0)?.to_radians();
        CameraExtrinsics::from_mount(t[0], t[1], t[2], pitch, yaw)
    };
    let name = doc.str("name").map(str::to_string).unwrap_or_else(|| {
        doc.path()
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "camera".into())
    });
    Ok(CameraRig {
        name,
        intrinsics: intr,
        extrinsics: ext,
        scale: None,
    })
}

pub fn load_camera(path: &Path) -> Result<CameraRig> {
    parse_camera(&KvDoc::load(path)?)
}

fn list(v: &[f64]) -> String {
    let items: Vec<String> = v.iter().map(|x| num(*x)).collect();
    format!("[{}]", items.join(", "))
}

pub fn write_camera(rig: &CameraRig) -> Result<String> {
    let i = &rig.intrinsics;
    let d = &i.distortion;
    let rvec = rodrigues_inv(&rig.extrinsics.rotation)?;
    let t = rig.extrinsics.translation;
    Ok(format!(
        "# Pinhole camera. Pixels for fx, fy, cx, cy; meters for ext_t (x right,\n\
         # y forward, z up from the drive center on the ground); ext_rvec is the\n\
         # camera-to-robot rotation vector in radians.\n\
         name = {}\nfx = {}\nfy = {}\ncx = {}\ncy = {}\nwidth = {}\nheight = {}\ndist = {}\next_rvec = {}\next_t = {}\n",
        rig.name,
        num(i.fx),
        num(i.fy),
        num(i.cx),
        num(i.cy),
        i.width,
        i.height,
        list(&[d.k1, d.k2, d.p1, d.p2, d.k3]),
        list(&[rvec.x, rvec.y, rvec.z]),
        list(&[t.x, t.y, t.z]),
    ))
}

const EMBODIMENT_KEYS: &[&str] = &[
    "preset",
    "name",
    "l_front",
    "l_rear",
    "width",
    "height",
    "v_max",
    "omega_max",
    "a_v_max",
    "a_omega_max",
];

fn resolve(base: &Path, rel: &str) -> PathBuf {
    let p = Path::new(rel);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.parent().unwrap_or(Path::new(".")).join(p)
    }
}

/// Body, limits and cameras. A `preset` supplies defaults; each `camera`
/// line (`camera = <file> [<calibration file>]`, paths relative to this
/// file) replaces the preset's cameras.
pub fn parse_embodiment(doc: &KvDoc) -> Result<EmbodimentProfile> {
    doc.check_keys(EMBODIMENT_KEYS, &["camera"])?;
    let base = match doc.str("preset") {
        Some(name) => Some(
            EmbodimentProfile::preset(name)
                .ok_or_else(|| doc.err(format!("unknown preset {name:?}; known: {:?}", EmbodimentProfile::preset_names())))?,
        ),
        None => None,
    };
    let val = |key: &str, fallback: Option<f64>| -> Result<f64> {
        match (doc.f64(key)?, fallback) {
            (Some(v), _) | (None, Some(v)) => Ok(v),
            (None, None) => Err(doc.err(format!("missing key `{key}` (or give a `preset`)"))),
        }
    };
    let b = base.as_ref();
    let body = RobotBody::new(
        val("l_front", b.map(|p| p.body.l_front))?,
        val("l_rear", b.map(|p| p.body.l_rear))?,
        val("width", b.map(|p| p.body.width))?,
        val("height", b.map(|p| p.body.height))?,
    )?;
    let limits = DynamicLimits::new(
        val("v_max", b.map(|p| p.limits.v_max))?,
        val("omega_max", b.map(|p| p.limits.omega_max))?,
        val("a_v_max", b.map(|p| p.limits.a_v_max))?,
        val("a_omega_max", b.map(|p| p.limits.a_omega_max))?,
    )?;
    let camera_lines = doc.all("camera");
    let cameras = if camera_lines.is_empty() {
        b.map(|p| p.cameras.clone()).unwrap_or_default()
    } else {
        let mut out = Vec::new();
        for line in camera_lines {
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.is_empty() || parts.len() > 2 {
                return Err(doc.err(format!("`camera = {line}`: expected `<file> [<calibration file>]`")));
            }
            let mut rig = load_camera(&resolve(doc.path(), parts[0]))?;
            if let Some(calib) = parts.get(1) {
                rig.scale = Some(load_scale(&resolve(doc.path(), calib))?);
            }
            out.push(rig);
        }
        out
    };
    let name = doc
        .str("name")
        .map(str::to_string)
        .or_else(|| b.map(|p| p.name.clone()))
        .unwrap_or_else(|| "custom".into());
    let profile = EmbodimentProfile {
        name,
        body,
        limits,
        cameras,
    };
    profile.validate()?;
    Ok(profile)
}

pub fn load_embodiment(path: &Path) -> Result<EmbodimentProfile> {
    parse_embodiment(&KvDoc::load(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn camera_round_trip() {
        let rig = EmbodimentProfile::preset("dmr1").unwrap().cameras[1].clone();
        let text = write_camera(&rig).unwrap();
        let back = parse_camera(&KvDoc::parse(Path::new("left.cam"), &text).unwrap()).unwrap();
        assert_eq!(back.intrinsics, rig.intrinsics);
        assert_eq!(back.extrinsics.translation, rig.extrinsics.translation);
        let a = back.extrinsics.rotation.0;
        let b = rig.extrinsics.rotation.0;
        for r in 0..3 {
            for c in 0..3 {
                assert!((a[r][c] - b[r][c]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn mount_angles_match_rotation_vector() {
        let text = "fx = 100\nfy = 100\ncx = 50\ncy = 40\nwidth = 101\nheight = 81\next_t = [0, 0.1, 0.4]\n";
        let a = parse_camera(&KvDoc::parse(Path::new("a.cam"), text).unwrap()).unwrap();
        let b = parse_camera(
            &KvDoc::parse(
                Path::new("b.cam"),
                &format!("{text}ext_rvec = [-1.5707963267948966, 0, 0]\n"),
            )
            .unwrap(),
        )
        .unwrap();
        let base = visnav_core::geometry::optical_to_robot_base().0;
        for r in 0..3 {
            for c in 0..3 {
                assert!((a.extrinsics.rotation.0[r][c] - base[r][c]).abs() < 1e-12);
                assert!((b.extrinsics.rotation.0[r][c] - base[r][c]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn embodiment_preset_with_overrides() {
        let doc = KvDoc::parse(Path::new("e.txt"), "preset = dmr1\nl_rear = 0.45\nv_max = 0.8\n").unwrap();
        let p = parse_embodiment(&doc).unwrap();
        assert_eq!(p.body.l_rear, 0.45);
        assert_eq!(p.limits.v_max, 0.8);
        assert_eq!(p.cameras.len(), 3);
        let doc = KvDoc::parse(Path::new("e.txt"), "l_front = 0.2\n").unwrap();
        assert!(parse_embodiment(&doc).is_err());
    }
}
