//! Scan dumps: `angle_min`, `angle_max`, `num_bins` and `range_max` as
//! `key = value` lines, then one range per line in bin order.

use std::path::Path;

use visnav_core::scan::{ScanConfig, VirtualScan};

use crate::error::{parse_f64, read_text, CliError, Result};
use crate::kv::{num, KvDoc};

const HEADER: &[&str] = &["angle_min", "angle_max", "num_bins", "range_max"];

pub fn write_scan(scan: &VirtualScan) -> String {
    let c = &scan.config;
    let mut s = format!(
        "angle_min = {}\nangle_max = {}\nnum_bins = {}\nrange_max = {}\n",
        num(c.angle_min),
        num(c.angle_max),
        c.num_bins,
        num(c.range_max)
    );
    for r in &scan.ranges {
        s.push_str(&num(*r));
        s.push('\n');
    }
    s
}

/// Height band and stride are not stored; they take the defaults of
/// [`ScanConfig::for_robot_height`] with height 1.
pub fn parse_scan(path: &Path, text: &str) -> Result<VirtualScan> {
    let mut header = String::new();
    let mut ranges = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if line.contains('=') {
            if !ranges.is_empty() {
                return Err(CliError::format(path, format!("line {}: header after ranges", i + 1)));
            }
            header.push_str(line);
            header.push('\n');
        } else {
            ranges.push(parse_f64(line, &format!("{} line {}", path.display(), i + 1))?);
        }
    }
    let doc = KvDoc::parse(path, &header)?;
    doc.check_keys(HEADER, &[])?;
    let mut cfg = ScanConfig::for_robot_height(1.0);
    cfg.angle_min = doc.req_f64("angle_min")?;
    cfg.angle_max = doc.req_f64("angle_max")?;
    cfg.num_bins = doc.usize("num_bins")?.ok_or_else(|| doc.err("missing key `num_bins`"))?;
    cfg.range_max = doc.req_f64("range_max")?;
    VirtualScan::from_ranges(cfg, ranges).map_err(|e| CliError::format(path, e.to_string()))
}

pub fn load_scan(path: &Path) -> Result<VirtualScan> {
    parse_scan(path, &read_text(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let mut cfg = ScanConfig::for_robot_height(1.0);
        cfg.num_bins = 4;
        let scan = VirtualScan::from_ranges(cfg, vec![1.0, 0.25, 10.0, 3.3]).unwrap();
        let back = parse_scan(Path::new("s"), &write_scan(&scan)).unwrap();
        assert_eq!(back, scan);
    }

    #[test]
    fn wrong_count_is_a_format_error() {
        let text = "angle_min = -1\nangle_max = 1\nnum_bins = 3\nrange_max = 5\n1\n2\n";
        assert!(matches!(parse_scan(Path::new("s"), text), Err(CliError::Format { .. })));
    }
}
