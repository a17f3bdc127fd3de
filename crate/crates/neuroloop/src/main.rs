//! Command-line experiment runner.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use neuroloop::experiments::{dnf, dpi, energy, navigate, sequence, streams, wta};
use neuroloop::io::{aer, arena, config::Config, connectivity, csv, svg};
use neuroloop_core::agents::{RobotState, TrialParams};
use neuroloop_core::chip::{ChipConfig, EventKind};
use neuroloop_core::fields::{preset_decay, preset_selfsustain};

#[derive(Parser)]
#[command(name = "neuroloop", about = "Neuromorphic processor emulator experiments")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Integrator step/spike responses, full vs. linear equation.
    Dpi(Common),
    /// Neural field simulation: bump formation, sustain or decay.
    Dnf(Common),
    /// Winner-take-all selection on noisy two-target streams.
    Wta(Common),
    /// Closed-loop robot navigation trials.
    Navigate(Common),
    /// Sequence learning and replay.
    Sequence(Common),
    /// SOP/energy accounting for a saved event stream.
    Energy(Common),
}

#[derive(Args)]
struct Common {
    /// Experiment config file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (default: out/<subcommand>).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Single seed, overriding the config seed list.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for seed-parallel batches (0 = all cores).
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// Skip SVG plot emission; CSV artifacts are always written.
    #[arg(long)]
    no_plots: bool,
}

struct Ctx {
    cfg: Config,
    dir: PathBuf,
    out: PathBuf,
    seeds: Vec<u64>,
    jobs: usize,
    plots: bool,
}

impl Ctx {
    fn new(c: &Common, default_out: &str) -> Result<Self> {
        let cfg = Config::load(&c.config)?;
        let dir = c
            .config
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_default();
        let out = c.out.clone().unwrap_or_else(|| PathBuf::from(default_out));
        std::fs::create_dir_all(&out)
            .with_context(|| format!("cannot create output dir `{}`", out.display()))?;
        let seeds = resolve_seeds(c.seed, &cfg)?;
        Ok(Ctx {
            cfg,
            dir,
            out,
            seeds,
            jobs: c.jobs,
            plots: !c.no_plots,
        })
    }

    /// Resolve a config-relative path.
    fn path(&self, key: &str) -> Result<PathBuf> {
        Ok(self.dir.join(self.cfg.require(key)?))
    }

    fn write(&self, name: &str, bytes: &[u8]) -> Result<()> {
        let p = self.out.join(name);
        std::fs::write(&p, bytes).with_context(|| format!("cannot write `{}`", p.display()))
    }
}

/// Seed precedence: --seed, then the config `seeds` list, then
/// NEUROLOOP_SEED, then 0.
fn resolve_seeds(cli: Option<u64>, cfg: &Config) -> Result<Vec<u64>> {
    if let Some(s) = cli {
        return Ok(vec![s]);
    }
    if let Some(list) = cfg.get_seeds("seeds")? {
        return Ok(list);
    }
    if let Ok(v) = std::env::var("NEUROLOOP_SEED") {
        return Ok(vec![v.parse().context("bad NEUROLOOP_SEED")?]);
    }
    Ok(vec![0])
}

/// Scientific notation for energy-scale values.
fn sci(v: f64) -> String {
    format!("{v:e}")
}

fn chip_config(cfg: &Config, seed: u64) -> Result<ChipConfig> {
    let d = ChipConfig::default();
    Ok(ChipConfig {
        seed,
        mismatch_cv: cfg.f64_or("chip.mismatch_cv", d.mismatch_cv)?,
        energy_per_sop: cfg.f64_or("chip.energy_per_sop", d.energy_per_sop)?,
        i_w_unit: cfg.f64_or("chip.i_w_unit", d.i_w_unit)?,
        dt: cfg.f64_or("chip.dt", d.dt)?,
        ..d
    })
}

fn main() -> Result<()> {
    match Cli::parse().cmd {
        Cmd::Dpi(c) => cmd_dpi(&Ctx::new(&c, "out/dpi")?),
        Cmd::Dnf(c) => cmd_dnf(&Ctx::new(&c, "out/dnf")?),
        Cmd::Wta(c) => cmd_wta(&Ctx::new(&c, "out/wta")?),
        Cmd::Navigate(c) => cmd_navigate(&Ctx::new(&c, "out/navigate")?),
        Cmd::Sequence(c) => cmd_sequence(&Ctx::new(&c, "out/sequence")?),
        Cmd::Energy(c) => cmd_energy(&Ctx::new(&c, "out/energy")?),
    }
}

fn cmd_dpi(ctx: &Ctx) -> Result<()> {
    let mut run = dpi::DpiRun::default();
    run.i_in_ratio = ctx.cfg.f64_or("dpi.i_in_ratio", run.i_in_ratio)?;
    run.duration_tau = ctx.cfg.f64_or("dpi.duration_tau", run.duration_tau)?;
    run.dt_tau = ctx.cfg.f64_or("dpi.dt_tau", run.dt_tau)?;
    run.spike_rate_hz = ctx.cfg.f64_or("dpi.spike_rate_hz", run.spike_rate_hz)?;
    run.spike_weight = ctx.cfg.f64_or("dpi.spike_weight", run.spike_weight)?;
    run.i_w_unit = ctx.cfg.f64_or("dpi.i_w_unit", run.i_w_unit)?;
    run.params.leak_current = ctx
        .cfg
        .f64_or("dpi.leak_current", run.params.leak_current)?;
    run.params.gain_current = ctx
        .cfg
        .f64_or("dpi.gain_current", run.params.gain_current)?;
    run.params.capacitance = ctx.cfg.f64_or("dpi.capacitance", run.params.capacitance)?;

    let traces = dpi::run_dpi(&run)?;
    let three = |rows: &[(f64, f64, f64)]| {
        let mut buf = Vec::new();
        csv::write_table(
            &mut buf,
            &["t", "full", "linear"],
            &rows
                .iter()
                .map(|(t, f, l)| vec![t.to_string(), f.to_string(), l.to_string()])
                .collect::<Vec<_>>(),
        )
        .map(|_| buf)
    };
    ctx.write("step.csv", &three(&traces.step)?)?;
    ctx.write("spikes.csv", &three(&traces.spikes)?)?;
    let mut buf = Vec::new();
    csv::write_table(
        &mut buf,
        &["t", "linear_analytic"],
        &traces
            .analytic
            .iter()
            .map(|(t, v)| vec![t.to_string(), v.to_string()])
            .collect::<Vec<_>>(),
    )?;
    ctx.write("analytic.csv", &buf)?;
    let mut buf = Vec::new();
    csv::write_summary(
        &mut buf,
        &[
            ("tau_s", traces.tau.to_string()),
            ("i_in_ratio", run.i_in_ratio.to_string()),
            ("late_disagreement", traces.late_disagreement.to_string()),
        ],
    )?;
    ctx.write("summary.txt", &buf)?;
    if ctx.plots {
        let pick = |rows: &[(f64, f64, f64)], full: bool| -> Vec<(f64, f64)> {
            rows.iter()
                .map(|&(t, f, l)| (t, if full { f } else { l }))
                .collect()
        };
        let (sf, sl) = (pick(&traces.step, true), pick(&traces.step, false));
        ctx.write(
            "step.svg",
            svg::line_svg(&[("full", &sf), ("linear", &sl), ("analytic", &traces.analytic)])
                .as_bytes(),
        )?;
        let (kf, kl) = (pick(&traces.spikes, true), pick(&traces.spikes, false));
        ctx.write(
            "spikes.svg",
            svg::line_svg(&[("full", &kf), ("linear", &kl)]).as_bytes(),
        )?;
    }
    Ok(())
}

fn cmd_dnf(ctx: &Ctx) -> Result<()> {
    let (field, kernel) = match ctx.cfg.get("dnf.preset") {
        Some("selfsustain") | None => preset_selfsustain(),
        Some("decay") => preset_decay(),
        Some(other) => anyhow::bail!("unknown dnf preset `{other}`"),
    };
    let mut run = dnf::DnfRun::new(field, kernel);
    run.input_center = ctx.cfg.f64_or("dnf.input_center", run.input_center)?;
    run.input_sigma = ctx.cfg.f64_or("dnf.input_sigma", run.input_sigma)?;
    run.input_amplitude = ctx.cfg.f64_or("dnf.input_amplitude", run.input_amplitude)?;
    run.on_tau = ctx.cfg.f64_or("dnf.on_tau", run.on_tau)?;
    run.off_tau = ctx.cfg.f64_or("dnf.off_tau", run.off_tau)?;
    run.kernel.a_exc = ctx.cfg.f64_or("dnf.a_exc", run.kernel.a_exc)?;
    run.kernel.a_inh = ctx.cfg.f64_or("dnf.a_inh", run.kernel.a_inh)?;

    let trace = dnf::run_dnf(&run)?;
    let mut buf = Vec::new();
    csv::write_field_csv(&mut buf, &trace.rows)?;
    ctx.write("field.csv", &buf)?;
    let mut buf = Vec::new();
    csv::write_summary(
        &mut buf,
        &[
            ("n_final_peaks", trace.final_peaks.len().to_string()),
            (
                "final_peak_position",
                trace
                    .final_peaks
                    .first()
                    .map_or("none".into(), |p| p.position.to_string()),
            ),
            ("final_max_u", trace.final_max_u.to_string()),
            ("final_dev_from_rest", trace.final_dev_from_rest.to_string()),
        ],
    )?;
    ctx.write("summary.txt", &buf)?;
    if ctx.plots {
        let max_u: Vec<(f64, f64)> = trace
            .rows
            .iter()
            .map(|(t, u)| (*t, u.iter().cloned().fold(f64::NEG_INFINITY, f64::max)))
            .collect();
        let final_profile: Vec<(f64, f64)> = trace
            .rows
            .last()
            .map(|(_, u)| u.iter().enumerate().map(|(i, &v)| (i as f64, v)).collect())
            .unwrap_or_default();
        ctx.write("max_u.svg", svg::line_svg(&[("max u(t)", &max_u)]).as_bytes())?;
        ctx.write(
            "final_profile.svg",
            svg::line_svg(&[("u(x, end)", &final_profile)]).as_bytes(),
        )?;
    }
    Ok(())
}

fn cmd_wta(ctx: &Ctx) -> Result<()> {
    let mut rig = wta::WtaRig::default();
    rig.mismatch_cv = ctx.cfg.f64_or("wta.mismatch_cv", rig.mismatch_cv)?;
    let loc_strong = ctx.cfg.f64_or("wta.loc_strong", 16.0)?;
    let loc_weak = ctx.cfg.f64_or("wta.loc_weak", 48.0)?;
    let rate_strong = ctx.cfg.f64_or("wta.rate_strong", 300.0)?;
    let rate_weak = ctx.cfg.f64_or("wta.rate_weak", 200.0)?;
    let duration = ctx.cfg.f64_or("wta.duration", 1.0)?;

    let mut rows = Vec::new();
    let mut agree = 0usize;
    for &seed in &ctx.seeds {
        let out = wta::run_two_target(
            &rig, seed, loc_strong, loc_weak, rate_strong, rate_weak, duration,
        );
        let n_exc = rig.n_exc() as u32;
        let (_, in_std) = streams::mean_std(out.input_events.iter().map(|e| e.address as f64));
        // exclude the inhibitory pool from the output spread
        let (_, out_std) = streams::mean_std(
            out.output_events
                .iter()
                .filter(|e| e.address < n_exc)
                .map(|e| e.address as f64),
        );
        if out.agree() {
            agree += 1;
        }
        let mut buf = Vec::new();
        aer::write_events(&mut buf, &out.input_events)?;
        ctx.write(&format!("input_raster_{seed}.csv"), &buf)?;
        let mut buf = Vec::new();
        aer::write_events(&mut buf, &out.output_events)?;
        ctx.write(&format!("output_raster_{seed}.csv"), &buf)?;
        if ctx.plots {
            ctx.write(
                &format!("raster_{seed}.svg"),
                svg::raster_svg(&out.output_events, &format!("WTA output, seed {seed}")).as_bytes(),
            )?;
        }
        rows.push(vec![
            seed.to_string(),
            out.spiking_winner.map_or("none".into(), |w| w.to_string()),
            out.continuous_winner.map_or("none".into(), |w| w.to_string()),
            out.agree().to_string(),
            in_std.to_string(),
            out_std.to_string(),
        ]);
    }
    let mut buf = Vec::new();
    csv::write_table(
        &mut buf,
        &[
            "seed",
            "spiking_winner",
            "continuous_winner",
            "agree",
            "input_spatial_std",
            "output_spatial_std",
        ],
        &rows,
    )?;
    ctx.write("trials.csv", &buf)?;
    let mut buf = Vec::new();
    csv::write_summary(
        &mut buf,
        &[
            ("trials", ctx.seeds.len().to_string()),
            ("agreement", agree.to_string()),
            ("loc_strong", loc_strong.to_string()),
            ("loc_weak", loc_weak.to_string()),
        ],
    )?;
    ctx.write("summary.txt", &buf)?;
    Ok(())
}

fn cmd_navigate(ctx: &Ctx) -> Result<()> {
    let arena = arena::read_arena(ctx.path("navigate.arena")?)?;
    let mut p = TrialParams::default();
    p.duration = ctx.cfg.f64_or("navigate.duration", p.duration)?;
    p.start = RobotState::at(
        ctx.cfg.f64_or("navigate.start_x", p.start.x)?,
        ctx.cfg.f64_or("navigate.start_y", p.start.y)?,
        ctx.cfg.f64_or("navigate.start_theta", p.start.theta)?,
    );
    p.gains.g_v = ctx.cfg.f64_or("navigate.g_v", p.gains.g_v)?;
    p.gains.g_omega = ctx.cfg.f64_or("navigate.g_omega", p.gains.g_omega)?;

    let results = navigate::run_batch(&arena, &p, &ctx.seeds, ctx.jobs)?;
    let mut rows = Vec::new();
    for (seed, r) in &results {
        let mut buf = Vec::new();
        csv::write_trajectory(&mut buf, &r.trajectory)?;
        ctx.write(&format!("trajectory_{seed}.csv"), &buf)?;
        if ctx.plots {
            ctx.write(
                &format!("trajectory_{seed}.svg"),
                svg::trajectory_svg(&arena, &r.trajectory).as_bytes(),
            )?;
        }
        rows.push(vec![
            seed.to_string(),
            u8::from(r.reached).to_string(),
            r.collisions.to_string(),
            r.time_to_target.map_or("".into(), |t| t.to_string()),
            r.sop_count.to_string(),
            sci(r.energy),
        ]);
    }
    let mut buf = Vec::new();
    csv::write_table(
        &mut buf,
        &["seed", "reached", "collisions", "time_to_target", "sop_count", "energy_j"],
        &rows,
    )?;
    ctx.write("aggregate.csv", &buf)?;
    let a = navigate::aggregate(&results);
    let mut buf = Vec::new();
    csv::write_summary(
        &mut buf,
        &[
            ("trials", a.trials.to_string()),
            ("reached", a.reached.to_string()),
            ("success_rate", (a.reached as f64 / a.trials.max(1) as f64).to_string()),
            ("collisions", a.collisions.to_string()),
            ("mean_time_to_target_s", a.mean_time.to_string()),
            ("total_sops", a.total_sops.to_string()),
            ("total_energy_j", sci(a.total_energy)),
        ],
    )?;
    ctx.write("summary.txt", &buf)?;
    Ok(())
}

fn cmd_sequence(ctx: &Ctx) -> Result<()> {
    let mut job = sequence::SequenceJob::default();
    if let Some(items) = ctx.cfg.get("sequence.items") {
        job.items = items
            .split(',')
            .map(|s| s.trim().parse().context("bad sequence item"))
            .collect::<Result<_>>()?;
    }
    job.run.t_item = ctx.cfg.f64_or("sequence.t_item", job.run.t_item)?;
    job.run.t_hold = ctx.cfg.f64_or("sequence.t_hold", job.run.t_hold)?;

    let results = sequence::run_batch(&job, &ctx.seeds, ctx.jobs)?;
    let mut rows = Vec::new();
    for (seed, out) in &results {
        let mut buf = Vec::new();
        aer::write_events(&mut buf, &out.raster)?;
        ctx.write(&format!("raster_{seed}.csv"), &buf)?;
        if ctx.plots {
            ctx.write(
                &format!("raster_{seed}.svg"),
                svg::raster_svg(&out.raster, &format!("sequence run, seed {seed}")).as_bytes(),
            )?;
        }
        let mut buf = Vec::new();
        let n_loc = out.x_neurons.first().map_or(0, Vec::len);
        let header: Vec<String> = (0..n_loc).map(|j| format!("loc_{j}")).collect();
        let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
        csv::write_table(
            &mut buf,
            &header_refs,
            &out.x_neurons
                .iter()
                .map(|row| row.iter().map(f64::to_string).collect())
                .collect::<Vec<_>>(),
        )?;
        ctx.write(&format!("x_matrix_{seed}.csv"), &buf)?;
        rows.push(vec![
            seed.to_string(),
            format!("{:?}", out.replay).replace(',', ";"),
            sequence::replay_matches(&job.items, out, 2.0).to_string(),
            sequence::x_margin(&job.items, out).to_string(),
            out.sop_count.to_string(),
            sci(out.energy),
        ]);
    }
    let matched = results
        .iter()
        .filter(|(_, o)| sequence::replay_matches(&job.items, o, 2.0))
        .count();
    let mut buf = Vec::new();
    csv::write_table(
        &mut buf,
        &["seed", "replay", "matched", "x_margin", "sop_count", "energy_j"],
        &rows,
    )?;
    ctx.write("trials.csv", &buf)?;
    let mut buf = Vec::new();
    csv::write_summary(
        &mut buf,
        &[
            ("items", format!("{:?}", job.items).replace(',', ";")),
            ("trials", results.len().to_string()),
            ("matched", matched.to_string()),
        ],
    )?;
    ctx.write("summary.txt", &buf)?;
    Ok(())
}

fn cmd_energy(ctx: &Ctx) -> Result<()> {
    let events = aer::read_events(ctx.path("energy.events")?, EventKind::Input)?;
    let conn = connectivity::read_connectivity(ctx.path("energy.connectivity")?)?;
    let constants_path = ctx.path("energy.constants")?;
    let constants = energy::parse_constants(
        &std::fs::read_to_string(&constants_path)
            .with_context(|| format!("cannot read `{}`", constants_path.display()))?,
    )?;
    let seed = ctx.seeds.first().copied().unwrap_or(0);
    let cfg = chip_config(&ctx.cfg, seed)?;
    let (sops, out) = energy::replay(&cfg, conn, &events)?;
    let mut buf = Vec::new();
    aer::write_events(&mut buf, &out)?;
    ctx.write("output_events.csv", &buf)?;
    let mut buf = Vec::new();
    csv::write_table(
        &mut buf,
        &["processor", "energy_per_sop_j", "sop_count", "total_energy_j"],
        &energy::energy_table(sops, &constants)
            .iter()
            .map(|(n, e, tot)| {
                vec![n.clone(), sci(*e), sops.to_string(), sci(*tot)]
            })
            .collect::<Vec<_>>(),
    )?;
    ctx.write("energy.csv", &buf)?;
    let mut buf = Vec::new();
    csv::write_summary(
        &mut buf,
        &[
            ("input_events", events.len().to_string()),
            ("output_events", out.len().to_string()),
            ("sop_count", sops.to_string()),
        ],
    )?;
    ctx.write("summary.txt", &buf)?;
    Ok(())
}
