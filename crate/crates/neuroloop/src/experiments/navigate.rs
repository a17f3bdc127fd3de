//! Seed-parallel navigation trial batches.

use anyhow::Result;
use neuroloop_core::agents::{run_navigation_trial, Arena, TrialParams, TrialResult};

/// Run one trial per seed, in parallel over `jobs` threads (0 = rayon
/// default), returning results sorted by seed.
pub fn run_batch(
    arena: &Arena,
    params: &TrialParams,
    seeds: &[u64],
    jobs: usize,
) -> Result<Vec<(u64, TrialResult)>> {
    let run = || -> Result<Vec<(u64, TrialResult)>> {
        use rayon::prelude::*;
        let mut results = seeds
            .par_iter()
            .map(|&seed| {
                run_navigation_trial(arena, seed, params)
                    .map(|r| (seed, r))
                    .map_err(|e| anyhow::anyhow!("trial seed {seed} failed: {e:?}"))
            })
            .collect::<Result<Vec<_>>>()?;
        results.sort_by_key(|(seed, _)| *seed);
        Ok(results)
    };
    if jobs == 0 {
        run()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()?
            .install(run)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct NavAggregate {
    pub trials: usize,
    pub reached: usize,
    pub collisions: usize,
    /// Mean time to target over successful trials, seconds.
    pub mean_time: f64,
    pub total_energy: f64,
    pub total_sops: u64,
}

pub fn aggregate(results: &[(u64, TrialResult)]) -> NavAggregate {
    let mut a = NavAggregate {
        trials: results.len(),
        ..NavAggregate::default()
    };
    let mut time_sum = 0.0;
    for (_, r) in results {
        if r.reached {
            a.reached += 1;
            time_sum += r.time_to_target.unwrap_or(0.0);
        }
        a.collisions += r.collisions as usize;
        a.total_energy += r.energy;
        a.total_sops += r.sop_count;
    }
    if a.reached > 0 {
        a.mean_time = time_sum / a.reached as f64;
    }
    a
}
