//! Minimal hand-rolled SVG plots. These are convenience visuals only; the
//! CSV artifacts carry all the data.

use std::fmt::Write as _;

use neuroloop_core::agents::{Arena, TrajectorySample};
use neuroloop_core::chip::AerEvent;

const W: f64 = 640.0;
const H: f64 = 480.0;
const PAD: f64 = 40.0;

fn header(out: &mut String) {
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" \
         viewBox=\"0 0 {W} {H}\">"
    );
    let _ = writeln!(
        out,
        "<rect width=\"{W}\" height=\"{H}\" fill=\"white\" stroke=\"#888\"/>"
    );
}

struct Map {
    x0: f64,
    y0: f64,
    sx: f64,
    sy: f64,
}

impl Map {
    fn new(xmin: f64, xmax: f64, ymin: f64, ymax: f64) -> Self {
        let dx = (xmax - xmin).max(1e-12);
        let dy = (ymax - ymin).max(1e-12);
        Map {
            x0: xmin,
            y0: ymin,
            sx: (W - 2.0 * PAD) / dx,
            sy: (H - 2.0 * PAD) / dy,
        }
    }
    fn x(&self, v: f64) -> f64 {
        PAD + (v - self.x0) * self.sx
    }
    // SVG y grows downward.
    fn y(&self, v: f64) -> f64 {
        H - PAD - (v - self.y0) * self.sy
    }
}

/// Arena top view with the trajectory polyline, obstacles, and target.
pub fn trajectory_svg(arena: &Arena, samples: &[TrajectorySample]) -> String {
    let mut out = String::new();
    header(&mut out);
    let m = Map::new(0.0, arena.width, 0.0, arena.height);
    for o in &arena.obstacles {
        let _ = writeln!(
            out,
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"{:.2}\" fill=\"#ccc\" stroke=\"#444\"/>",
            m.x(o.x),
            m.y(o.y),
            o.r * m.sx
        );
    }
    let _ = writeln!(
        out,
        "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"5\" fill=\"none\" stroke=\"green\" stroke-width=\"2\"/>",
        m.x(arena.target.x),
        m.y(arena.target.y)
    );
    if !samples.is_empty() {
        let mut pts = String::new();
        for s in samples {
            let _ = write!(pts, "{:.2},{:.2} ", m.x(s.x), m.y(s.y));
        }
        let _ = writeln!(
            out,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"#1f4e9c\" stroke-width=\"1.5\"/>",
            pts.trim_end()
        );
        let end = samples.last().unwrap();
        let color = if end.collision { "red" } else { "#1f4e9c" };
        let _ = writeln!(
            out,
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"{color}\"/>",
            m.x(end.x),
            m.y(end.y)
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Spike raster: time on x, address on y, one dot per event.
pub fn raster_svg(events: &[AerEvent], title: &str) -> String {
    let mut out = String::new();
    header(&mut out);
    let _ = writeln!(
        out,
        "<text x=\"{PAD}\" y=\"20\" font-family=\"monospace\" font-size=\"12\">{title}</text>"
    );
    if events.is_empty() {
        out.push_str("</svg>\n");
        return out;
    }
    let tmax = events.iter().map(|e| e.timestamp).max().unwrap().max(1) as f64;
    let amax = events.iter().map(|e| e.address).max().unwrap().max(1) as f64;
    let m = Map::new(0.0, tmax, 0.0, amax);
    for e in events {
        let _ = writeln!(
            out,
            "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"1\" height=\"1\" fill=\"black\"/>",
            m.x(e.timestamp as f64),
            m.y(e.address as f64)
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Line chart for one or more (t, value) series.
pub fn line_svg(series: &[(&str, &[(f64, f64)])]) -> String {
    const COLORS: [&str; 4] = ["#1f4e9c", "#c03020", "#208040", "#806010"];
    let mut out = String::new();
    header(&mut out);
    let pts = series.iter().flat_map(|(_, s)| s.iter());
    let (mut xmin, mut xmax, mut ymin, mut ymax) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for &(x, y) in pts {
        xmin = xmin.min(x);
        xmax = xmax.max(x);
        ymin = ymin.min(y);
        ymax = ymax.max(y);
    }
    if xmin > xmax {
        out.push_str("</svg>\n");
        return out;
    }
    let m = Map::new(xmin, xmax, ymin, ymax);
    for (i, (name, s)) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let mut pts = String::new();
        for &(x, y) in *s {
            let _ = write!(pts, "{:.2},{:.2} ", m.x(x), m.y(y));
        }
        let _ = writeln!(
            out,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>",
            pts.trim_end()
        );
        let _ = writeln!(
            out,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"monospace\" font-size=\"12\" \
             fill=\"{color}\">{name}</text>",
            W - PAD - 100.0,
            20.0 + 14.0 * i as f64
        );
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use neuroloop_core::agents::TargetSpec;

    #[test]
    fn svgs_are_well_formed_enough() {
        let arena = Arena::empty(2.0, 1.0, TargetSpec { x: 1.9, y: 0.5, blink_hz: 5.0 });
        let s = trajectory_svg(&arena, &[]);
        assert!(s.starts_with("<svg") && s.trim_end().ends_with("</svg>"));
        let r = raster_svg(&[AerEvent::output(10, 3)], "raster");
        assert!(r.contains("<rect"));
        let l = line_svg(&[("a", &[(0.0, 1.0), (1.0, 2.0)][..])]);
        assert!(l.contains("<polyline"));
    }
}
