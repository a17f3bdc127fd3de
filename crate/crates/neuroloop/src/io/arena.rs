//! Arena files: bounds, obstacle circles, LED target. Uses the common
//! config syntax:
//!
//! ```text
//! [arena]
//! width = 2.0
//! height = 1.6
//! [target]
//! x = 1.8
//! y = 0.8
//! blink_hz = 5.0
//! [obstacles]
//! circle = 0.7, 1.10, 0.08
//! ```

use std::io::Write;

use anyhow::{bail, Context, Result};
use neuroloop_core::agents::{Arena, Circle, TargetSpec};

use super::config::Config;

pub fn arena_from_config(cfg: &Config) -> Result<Arena> {
    let mut arena = Arena::empty(
        cfg.require("arena.width")?.parse().context("arena.width")?,
        cfg.require("arena.height")?.parse().context("arena.height")?,
        TargetSpec {
            x: cfg.require("target.x")?.parse().context("target.x")?,
            y: cfg.require("target.y")?.parse().context("target.y")?,
            blink_hz: cfg.f64_or("target.blink_hz", 5.0)?,
        },
    );
    for c in cfg.get_all("obstacles.circle") {
        let parts: Vec<&str> = c.split(',').map(str::trim).collect();
        let [x, y, r] = parts.as_slice() else {
            bail!("obstacle circle `{c}`: expected `x, y, r`");
        };
        arena.obstacles.push(Circle {
            x: x.parse().with_context(|| format!("obstacle `{c}`"))?,
            y: y.parse().with_context(|| format!("obstacle `{c}`"))?,
            r: r.parse().with_context(|| format!("obstacle `{c}`"))?,
        });
    }
    arena
        .validate()
        .map_err(|e| anyhow::anyhow!("invalid arena: {e:?}"))?;
    Ok(arena)
}

pub fn read_arena(path: impl AsRef<std::path::Path>) -> Result<Arena> {
    let p = path.as_ref();
    arena_from_config(&Config::load(p)?).with_context(|| format!("in `{}`", p.display()))
}

pub fn write_arena(w: &mut impl Write, arena: &Arena) -> Result<()> {
    writeln!(w, "[arena]")?;
    writeln!(w, "width = {}", arena.width)?;
    writeln!(w, "height = {}", arena.height)?;
    writeln!(w, "\n[target]")?;
    writeln!(w, "x = {}", arena.target.x)?;
    writeln!(w, "y = {}", arena.target.y)?;
    writeln!(w, "blink_hz = {}", arena.target.blink_hz)?;
    writeln!(w, "\n[obstacles]")?;
    for o in &arena.obstacles {
        writeln!(w, "circle = {}, {}, {}", o.x, o.y, o.r)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let mut a = Arena::empty(2.0, 1.6, TargetSpec { x: 1.8, y: 0.8, blink_hz: 5.0 });
        a.obstacles.push(Circle { x: 0.7, y: 1.1, r: 0.08 });
        a.obstacles.push(Circle { x: 1.1, y: 0.5, r: 0.08 });
        let mut buf = Vec::new();
        write_arena(&mut buf, &a).unwrap();
        let cfg = Config::parse(std::str::from_utf8(&buf).unwrap()).unwrap();
        let back = arena_from_config(&cfg).unwrap();
        assert_eq!(a, back);
    }

    #[test]
    fn invalid_arena_is_rejected() {
        let cfg = Config::parse(
            "[arena]\nwidth = 2.0\nheight = 1.0\n[target]\nx = 5.0\ny = 0.5\n",
        )
        .unwrap();
        assert!(arena_from_config(&cfg).is_err());
    }
}
