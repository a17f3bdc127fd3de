//! CSV and summary writers. All floats are printed with Rust's shortest
//! round-trip formatting so equal runs produce byte-identical files.

use std::io::Write;

use anyhow::Result;
use neuroloop_core::agents::TrajectorySample;

pub fn write_trajectory(w: &mut impl Write, samples: &[TrajectorySample]) -> Result<()> {
    writeln!(w, "t,x,y,theta,v,omega,collision_flag")?;
    for s in samples {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            s.t,
            s.x,
            s.y,
            s.theta,
            s.v,
            s.omega,
            u8::from(s.collision)
        )?;
    }
    Ok(())
}

/// Field trajectory: `t,u_0,...,u_{N-1}`, one row per recorded step.
pub fn write_field_csv(w: &mut impl Write, rows: &[(f64, Vec<f64>)]) -> Result<()> {
    let n = rows.first().map_or(0, |(_, u)| u.len());
    write!(w, "t")?;
    for i in 0..n {
        write!(w, ",u_{i}")?;
    }
    writeln!(w)?;
    for (t, u) in rows {
        write!(w, "{t}")?;
        for v in u {
            write!(w, ",{v}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// Generic numeric table with a header row.
pub fn write_table(w: &mut impl Write, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    writeln!(w, "{}", header.join(","))?;
    for r in rows {
        writeln!(w, "{}", r.join(","))?;
    }
    Ok(())
}

/// Structured-text summary: `key = value` lines under one `[summary]`
/// section, reusing the config syntax.
pub fn write_summary(w: &mut impl Write, entries: &[(&str, String)]) -> Result<()> {
    writeln!(w, "[summary]")?;
    for (k, v) in entries {
        writeln!(w, "{k} = {v}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trajectory_format() {
        let s = TrajectorySample {
            t: 0.5,
            x: 1.0,
            y: 2.0,
            theta: -0.25,
            v: 0.1,
            omega: 0.0,
            collision: true,
        };
        let mut buf = Vec::new();
        write_trajectory(&mut buf, &[s]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "t,x,y,theta,v,omega,collision_flag\n0.5,1,2,-0.25,0.1,0,1\n");
    }

    #[test]
    fn field_header_matches_width() {
        let mut buf = Vec::new();
        write_field_csv(&mut buf, &[(0.0, vec![1.0, 2.0])]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), "t,u_0,u_1");
    }
}
