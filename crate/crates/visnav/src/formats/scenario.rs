//! Scenario files, one record per line:
//!
//! ```text
//! bounds xmin ymin xmax ymax
//! start x y heading
//! goal x y
//! cyl x y radius height [base]
//! box x y half_x half_y height [base]
//! ```

use std::path::Path;

use visnav_core::sim::{Bounds, Obstacle, Shape, World};
use visnav_core::{Pose2D, Vec2};

use crate::error::{parse_f64, read_text, CliError, Result};
use crate::kv::num;

pub fn write_scenario(w: &World) -> String {
    let mut s = format!(
        "bounds {} {} {} {}\nstart {} {} {}\ngoal {} {}\n",
        num(w.bounds.min.x),
        num(w.bounds.min.y),
        num(w.bounds.max.x),
        num(w.bounds.max.y),
        num(w.start.x),
        num(w.start.y),
        num(w.start.heading),
        num(w.goal.x),
        num(w.goal.y),
    );
    for o in &w.obstacles {
        match o.shape {
            Shape::Cylinder { center, radius } => s.push_str(&format!(
                "cyl {} {} {} {}",
                num(center.x),
                num(center.y),
                num(radius),
                num(o.height)
            )),
            Shape::Box { center, half_extents } => s.push_str(&format!(
                "box {} {} {} {} {}",
                num(center.x),
                num(center.y),
                num(half_extents.x),
                num(half_extents.y),
                num(o.height)
            )),
        }
        if o.base != 0.0 {
            s.push_str(&format!(" {}", num(o.base)));
        }
        s.push('\n');
    }
    s
}

pub fn parse_scenario(path: &Path, text: &str) -> Result<World> {
    let mut bounds = None;
    let mut start = None;
    let mut goal = None;
    let mut obstacles = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let lineno = i + 1;
        let ctx = format!("{} line {lineno}", path.display());
        let mut f = line.split_whitespace();
        let tag = f.next().unwrap_or("");
        let v = f.map(|t| parse_f64(t, &ctx)).collect::<Result<Vec<_>>>()?;
        let arity = |ok: &[usize]| -> Result<()> {
            if ok.contains(&v.len()) {
                Ok(())
            } else {
                Err(CliError::format(
                    path,
                    format!("line {lineno}: `{tag}` takes {ok:?} numbers, got {}", v.len()),
                ))
            }
        };
        let once = |seen: bool| -> Result<()> {
            if seen {
                Err(CliError::format(path, format!("line {lineno}: `{tag}` given twice")))
            } else {
                Ok(())
            }
        };
        match tag {
            "bounds" => {
                arity(&[4])?;
                once(bounds.is_some())?;
                bounds = Some(
                    Bounds::new(Vec2::new(v[0], v[1]), Vec2::new(v[2], v[3]))
                        .map_err(|e| CliError::format(path, format!("line {lineno}: {e}")))?,
                );
            }
            "start" => {
                arity(&[3])?;
                once(start.is_some())?;
                start = Some(Pose2D::new(v[0], v[1], v[2]));
            }
            "goal" => {
                arity(&[2])?;
                once(goal.is_some())?;
                goal = Some(Vec2::new(v[0], v[1]));
            }
            "cyl" => {
                arity(&[4, 5])?;
                let o = Obstacle::cylinder(v[0], v[1], v[2], v[3]);
                obstacles.push(if v.len() == 5 { o.with_base(v[4]) } else { o });
            }
            "box" => {
                arity(&[5, 6])?;
                let o = Obstacle::boxed(v[0], v[1], v[2], v[3], v[4]);
                obstacles.push(if v.len() == 6 { o.with_base(v[5]) } else { o });
            }
            other => {
                return Err(CliError::format(path, format!("line {lineno}: unknown record `{other}`")));
            }
        }
    }
    let missing = |what: &str| CliError::format(path, format!("missing `{what}` record"));
    let world = World {
        obstacles,
        bounds: bounds.ok_or_else(|| missing("bounds"))?,
        start: start.ok_or_else(|| missing("start"))?,
        goal: goal.ok_or_else(|| missing("goal"))?,
    };
    world.validate().map_err(|e| CliError::format(path, e.to_string()))?;
    Ok(world)
}

pub fn load_scenario(path: &Path) -> Result<World> {
    parse_scenario(path, &read_text(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_with_boxes_and_bases() {
        let text = "bounds 0 0 5 8\nstart 2.5 1 0\ngoal 2.5 7\ncyl 1 4 0.2 2\nbox 3 4 0.5 0.1 0.3 1.2\n";
        let w = parse_scenario(Path::new("w"), text).unwrap();
        assert_eq!(w.obstacles.len(), 2);
        assert_eq!(w.obstacles[1].base, 1.2);
        assert_eq!(parse_scenario(Path::new("w"), &write_scenario(&w)).unwrap(), w);
    }

    #[test]
    fn malformed_records() {
        let base = "bounds 0 0 5 8\nstart 2.5 1 0\ngoal 2.5 7\n";
        for bad in ["cyl 1 2 3\n", "tree 1 2\n", "goal 1 1\n"] {
            let e = parse_scenario(Path::new("w"), &format!("{base}{bad}")).unwrap_err();
            assert!(matches!(e, CliError::Format { .. }), "{bad}: {e}");
        }
        assert!(matches!(
            parse_scenario(Path::new("w"), &format!("{base}cyl 1 2 x 1\n")),
            Err(CliError::Number { .. })
        ));
        assert!(parse_scenario(Path::new("w"), "bounds 0 0 5 8\n").is_err());
    }
}
