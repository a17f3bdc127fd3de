//! AER event files: one `timestamp_us,address` pair per line, `#`
//! comments, timestamps non-decreasing. The same format serves input and
//! output streams.

use std::io::Write;

use anyhow::{bail, Context, Result};
use neuroloop_core::chip::{AerEvent, EventKind};

pub fn parse_events(text: &str, kind: EventKind) -> Result<Vec<AerEvent>> {
    let mut out = Vec::new();
    let mut last = 0u64;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((ts, addr)) = line.split_once(',') else {
            bail!("event line {}: expected `timestamp_us,address`", i + 1);
        };
        let timestamp: u64 = ts
            .trim()
            .parse()
            .with_context(|| format!("event line {}: bad timestamp `{ts}`", i + 1))?;
        let address: u32 = addr
            .trim()
            .parse()
            .with_context(|| format!("event line {}: bad address `{addr}`", i + 1))?;
        if timestamp < last {
            bail!("event line {}: timestamps must be non-decreasing", i + 1);
        }
        last = timestamp;
        out.push(AerEvent {
            timestamp,
            address,
            kind,
        });
    }
    Ok(out)
}

pub fn read_events(path: impl AsRef<std::path::Path>, kind: EventKind) -> Result<Vec<AerEvent>> {
    let p = path.as_ref();
    let text = std::fs::read_to_string(p)
        .with_context(|| format!("cannot read event file `{}`", p.display()))?;
    parse_events(&text, kind).with_context(|| format!("in `{}`", p.display()))
}

pub fn write_events(w: &mut impl Write, events: &[AerEvent]) -> Result<()> {
    writeln!(w, "# timestamp_us,address")?;
    for e in events {
        writeln!(w, "{},{}", e.timestamp, e.address)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let ev = vec![
            AerEvent::input(0, 3),
            AerEvent::input(10, 1),
            AerEvent::input(10, 200),
        ];
        let mut buf = Vec::new();
        write_events(&mut buf, &ev).unwrap();
        let back = parse_events(std::str::from_utf8(&buf).unwrap(), EventKind::Input).unwrap();
        assert_eq!(ev, back);
    }

    #[test]
    fn rejects_decreasing_timestamps() {
        assert!(parse_events("5,0\n4,0\n", EventKind::Input).is_err());
        assert!(parse_events("5,0\nnot an event\n", EventKind::Input).is_err());
    }

    #[test]
    fn skips_comments_and_blanks() {
        let ev = parse_events("# header\n\n7,2 # trailing\n", EventKind::Output).unwrap();
        assert_eq!(ev.len(), 1);
        assert_eq!(ev[0].timestamp, 7);
        assert_eq!(ev[0].address, 2);
    }
}
