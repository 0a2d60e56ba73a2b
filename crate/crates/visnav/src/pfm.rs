//! Single-channel portable float maps.
//!
//! Header tokens `Pf`, width, height and a scale whose sign selects the
//! byte order (negative = little-endian), each followed by one whitespace
//! byte; then `width·height` 32-bit floats, bottom row first. Non-finite
//! samples mark invalid pixels.

use std::path::Path;

use visnav_core::depth::{DepthImage, DepthKind};

use crate::error::{CliError, Result};

fn header_token(bytes: &[u8], pos: &mut usize) -> Option<(usize, String)> {
    while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    if start == *pos || *pos >= bytes.len() {
        return None;
    }
    let tok = String::from_utf8_lossy(&bytes[start..*pos]).into_owned();
    // Exactly one whitespace byte terminates each token.
    *pos += 1;
    Some((start, tok))
}

pub fn decode_pfm(path: &Path, bytes: &[u8], kind: DepthKind) -> Result<DepthImage> {
    let bad = |offset: usize, msg: &str| CliError::format(path, format!("byte {offset}: {msg}"));
    let mut pos = 0;
    let (o, magic) = header_token(bytes, &mut pos).ok_or_else(|| bad(0, "missing PFM header"))?;
    match magic.as_str() {
        "Pf" => {}
        "PF" => return Err(bad(o, "three-channel PFM (PF) is not supported")),
        _ => return Err(bad(o, "not a PFM file")),
    }
    let mut dim = |what: &str| -> Result<usize> {
        let (o, t) = header_token(bytes, &mut pos).ok_or_else(|| bad(pos, &format!("missing {what}")))?;
        t.parse::<usize>()
            .ok()
            .filter(|v| *v > 0)
            .ok_or_else(|| bad(o, &format!("bad {what} {t:?}")))
    };
    let width = dim("width")?;
    let height = dim("height")?;
    let (o, scale_text) = header_token(bytes, &mut pos).ok_or_else(|| bad(pos, "missing scale"))?;
    let scale: f64 = scale_text
        .parse()
        .ok()
        .filter(|s: &f64| s.is_finite() && *s != 0.0)
        .ok_or_else(|| bad(o, &format!("bad scale {scale_text:?}")))?;
    let little = scale < 0.0;
    let n = width
        .checked_mul(height)
        .ok_or_else(|| bad(pos, "image too large"))?;
    let need = n * 4;
    let payload = &bytes[pos..];
    if payload.len() < need {
        return Err(bad(
            pos + payload.len(),
            &format!("truncated payload: {} of {need} bytes", payload.len()),
        ));
    }
    if payload.len() > need {
        return Err(bad(pos + need, "trailing bytes after payload"));
    }
    let mut data = vec![0.0f64; n];
    for (i, chunk) in payload.chunks_exact(4).enumerate() {
        let raw = [chunk[0], chunk[1], chunk[2], chunk[3]];
        let x = if little { f32::from_le_bytes(raw) } else { f32::from_be_bytes(raw) };
        let row_from_bottom = i / width;
        let u = i % width;
        let v = height - 1 - row_from_bottom;
        data[v * width + u] = f64::from(x);
    }
    Ok(DepthImage::from_data(width, height, data, kind)?)
}

pub fn encode_pfm(img: &DepthImage) -> Vec<u8> {
    let (w, h) = (img.width(), img.height());
    let mut out = format!("Pf\n{w} {h}\n-1.0\n").into_bytes();
    out.reserve(w * h * 4);
    for v in (0..h).rev() {
        for u in 0..w {
            let x = img.get(u, v).map_or(f32::NAN, |x| x as f32);
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    out
}

pub fn load_pfm(path: &Path, kind: DepthKind) -> Result<DepthImage> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    decode_pfm(path, &bytes, kind)
}

pub fn save_pfm(path: &Path, img: &DepthImage) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    std::fs::write(path, encode_pfm(img)).map_err(|e| CliError::io(path, e))
}
