//! Energy accounting: replay a saved AER stream through a chip and report
//! SOPs and energy under each processor's energy-per-SOP constant.

use anyhow::{bail, Context, Result};
use neuroloop_core::chip::{AerEvent, Chip, ChipConfig, ConnectivityMatrix};

/// Parse the processor constants data file: `name,energy_per_sop_joules`
/// lines with `#` comments.
pub fn parse_constants(text: &str) -> Result<Vec<(String, f64)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((name, e)) = line.split_once(',') else {
            bail!("constants line {}: expected `name,joules`", i + 1);
        };
        let e: f64 = e
            .trim()
            .parse()
            .with_context(|| format!("constants line {}: bad energy `{e}`", i + 1))?;
        out.push((name.trim().to_string(), e));
    }
    Ok(out)
}

/// Replay an input stream through a fresh chip built on `conn`; returns
/// the SOP count and the output events.
pub fn replay(
    cfg: &ChipConfig,
    conn: ConnectivityMatrix,
    events: &[AerEvent],
) -> Result<(u64, Vec<AerEvent>)> {
    let mut cfg = cfg.clone();
    cfg.n_neurons = conn.n_neurons();
    cfg.n_static_cols = conn.n_static();
    cfg.n_plastic_cols = conn.n_plastic();
    cfg.n_inputs = conn.n_inputs();
    let mut chip = Chip::build(cfg, conn).map_err(|e| anyhow::anyhow!("chip build: {e:?}"))?;
    let horizon = events.last().map_or(0, |e| e.timestamp) + 1000;
    let out = chip
        .advance(horizon, events)
        .map_err(|e| anyhow::anyhow!("replay: {e:?}"))?;
    Ok((chip.energy_report().sop_count, out))
}

/// (name, energy_per_sop, total_energy) rows for a SOP count.
pub fn energy_table(sops: u64, constants: &[(String, f64)]) -> Vec<(String, f64, f64)> {
    constants
        .iter()
        .map(|(name, e)| (name.clone(), *e, sops as f64 * *e))
        .collect()
}
