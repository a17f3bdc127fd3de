//! Connectivity files.
//!
//! Text sections: `[array]` with the matrix dimensions, `[static]` with
//! `neuron,column,level` triples, `[plastic]` with enabled columns and
//! their initial X as `neuron,column,x`, and `[routing]` with
//! `input_address -> neuron:column` entries (recurrent routes are written
//! as `out:source -> neuron:column`). Columns are indexed over the whole
//! row: static columns first, plastic columns after them.

use std::io::Write;

use anyhow::{bail, Context, Result};
use neuroloop_core::chip::{Column, ConnectivityMatrix};

pub fn write_connectivity(w: &mut impl Write, conn: &ConnectivityMatrix) -> Result<()> {
    let ns = conn.n_static() as u16;
    writeln!(w, "[array]")?;
    writeln!(w, "neurons = {}", conn.n_neurons())?;
    writeln!(w, "static_cols = {}", conn.n_static())?;
    writeln!(w, "plastic_cols = {}", conn.n_plastic())?;
    writeln!(w, "inputs = {}", conn.n_inputs())?;

    writeln!(w, "\n[static]")?;
    for (n, c, level) in conn.static_entries() {
        writeln!(w, "{n},{c},{level}")?;
    }

    writeln!(w, "\n[plastic]")?;
    for &idx in conn.enabled_plastic() {
        let n = idx as usize / conn.n_plastic();
        let c = idx as usize % conn.n_plastic();
        let x = conn.plastic_state(n as u16, c as u16);
        writeln!(w, "{n},{},{x}", ns as usize + c)?;
    }

    writeln!(w, "\n[routing]")?;
    for (addr, t) in conn.input_routes() {
        writeln!(w, "{addr} -> {}:{}", t.neuron, combined(t.column, ns))?;
    }
    for (src, t) in conn.recurrent_routes() {
        writeln!(w, "out:{src} -> {}:{}", t.neuron, combined(t.column, ns))?;
    }
    Ok(())
}

fn combined(c: Column, n_static: u16) -> u16 {
    match c {
        Column::Static(i) => i,
        Column::Plastic(i) => n_static + i,
    }
}

enum Route {
    Input(u32),
    Recurrent(u16),
}

pub fn parse_connectivity(text: &str) -> Result<ConnectivityMatrix> {
    let mut section = String::new();
    let mut sizes = [None::<usize>; 4];
    let mut statics = std::collections::BTreeMap::new();
    let mut plastics = std::collections::BTreeMap::new();
    let mut routes: Vec<(u16, u16, Route)> = Vec::new(); // (post, col, source)

    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        let ctx = || format!("connectivity line {}", i + 1);
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            section = name.trim().to_string();
            continue;
        }
        match section.as_str() {
            "array" => {
                let (k, v) = line.split_once('=').with_context(ctx)?;
                let v: usize = v.trim().parse().with_context(ctx)?;
                let slot = match k.trim() {
                    "neurons" => 0,
                    "static_cols" => 1,
                    "plastic_cols" => 2,
                    "inputs" => 3,
                    other => bail!("{}: unknown array key `{other}`", ctx()),
                };
                sizes[slot] = Some(v);
            }
            "static" => {
                let mut it = line.split(',');
                let n: u16 = next_field(&mut it, &ctx)?;
                let c: u16 = next_field(&mut it, &ctx)?;
                let level: i8 = next_field(&mut it, &ctx)?;
                if statics.insert((n, c), level).is_some() {
                    bail!("{}: duplicate static entry {n},{c}", ctx());
                }
            }
            "plastic" => {
                let mut it = line.split(',');
                let n: u16 = next_field(&mut it, &ctx)?;
                let c: u16 = next_field(&mut it, &ctx)?;
                let x: f64 = next_field(&mut it, &ctx)?;
                if plastics.insert((n, c), x).is_some() {
                    bail!("{}: duplicate plastic entry {n},{c}", ctx());
                }
            }
            "routing" => {
                let (src, dst) = line.split_once("->").with_context(ctx)?;
                let (neuron, col) = dst.trim().split_once(':').with_context(ctx)?;
                let post: u16 = neuron.trim().parse().with_context(ctx)?;
                let col: u16 = col.trim().parse().with_context(ctx)?;
                let src = src.trim();
                let route = if let Some(pre) = src.strip_prefix("out:") {
                    Route::Recurrent(pre.trim().parse().with_context(ctx)?)
                } else {
                    Route::Input(src.parse().with_context(ctx)?)
                };
                routes.push((post, col, route));
            }
            other => bail!("{}: entry outside a known section (`{other}`)", ctx()),
        }
    }

    let [Some(neurons), Some(n_static), Some(n_plastic), Some(inputs)] = sizes else {
        bail!("connectivity file is missing [array] dimensions");
    };
    let mut conn = ConnectivityMatrix::new(neurons, n_static, n_plastic, inputs);

    // Columns are cursor-allocated per neuron, so replaying the routes in
    // (neuron, column) order reproduces the matrix exactly.
    routes.sort_by_key(|&(post, col, _)| (post, col));
    let mut used_static = 0usize;
    let mut used_plastic = 0usize;
    for (post, col, route) in routes {
        if (col as usize) < n_static {
            let level = *statics
                .get(&(post, col))
                .with_context(|| format!("route to {post}:{col} has no static weight"))?;
            used_static += 1;
            match route {
                Route::Input(addr) => conn.route_input_static(addr, post, level),
                Route::Recurrent(pre) => conn.connect_static(pre, post, level),
            }
        } else {
            let x0 = *plastics
                .get(&(post, col))
                .with_context(|| format!("route to {post}:{col} has no plastic entry"))?;
            used_plastic += 1;
            match route {
                Route::Input(addr) => conn.route_input_plastic(addr, post, x0),
                Route::Recurrent(pre) => conn.connect_plastic(pre, post, x0),
            }
        }
        .map_err(|e| anyhow::anyhow!("route to {post}:{col}: {e:?}"))?;
    }
    if used_static != statics.len() {
        bail!("{} static entries have no route", statics.len() - used_static);
    }
    if used_plastic != plastics.len() {
        bail!("{} plastic entries have no route", plastics.len() - used_plastic);
    }
    Ok(conn)
}

fn next_field<T: std::str::FromStr>(
    it: &mut std::str::Split<'_, char>,
    ctx: &impl Fn() -> String,
) -> Result<T>
where
    T::Err: std::error::Error + Send + Sync + 'static,
{
    it.next()
        .with_context(|| format!("{}: missing field", ctx()))?
        .trim()
        .parse()
        .with_context(|| format!("{}: bad field", ctx()))
}

pub fn read_connectivity(path: impl AsRef<std::path::Path>) -> Result<ConnectivityMatrix> {
    let p = path.as_ref();
    let text = std::fs::read_to_string(p)
        .with_context(|| format!("cannot read connectivity file `{}`", p.display()))?;
    parse_connectivity(&text).with_context(|| format!("in `{}`", p.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ConnectivityMatrix {
        let mut c = ConnectivityMatrix::new(4, 3, 2, 8);
        c.route_input_static(0, 0, 3).unwrap();
        c.route_input_static(7, 1, -2).unwrap();
        c.connect_static(1, 2, 1).unwrap();
        c.connect_static(2, 2, -1).unwrap();
        c.connect_plastic(0, 3, 0.75).unwrap();
        c.route_input_plastic(5, 3, 0.0).unwrap();
        c
    }

    fn dump(c: &ConnectivityMatrix) -> String {
        let mut buf = Vec::new();
        write_connectivity(&mut buf, c).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        let c = sample();
        let text = dump(&c);
        let back = parse_connectivity(&text).unwrap();
        assert_eq!(dump(&back), text);
        assert_eq!(back.static_level(2, 0), 1);
        assert_eq!(back.plastic_state(3, 1), 0.0);
        assert_eq!(back.fan_out(7), 1);
    }

    #[test]
    fn orphan_entries_are_rejected() {
        let text = "[array]\nneurons = 2\nstatic_cols = 1\nplastic_cols = 1\ninputs = 1\n\
                    [static]\n0,0,2\n[routing]\n";
        assert!(parse_connectivity(text).is_err());
    }

    #[test]
    fn missing_sizes_are_rejected() {
        assert!(parse_connectivity("[static]\n0,0,1\n").is_err());
    }
}
