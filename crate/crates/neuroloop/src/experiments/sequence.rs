//! Seed-parallel sequence learning/replay batches.

use anyhow::Result;
use neuroloop_core::agents::{
    run_sequence_experiment, SequenceOutcome, SequenceParams, SequenceRun,
};

#[derive(Clone, Debug)]
pub struct SequenceJob {
    pub items: Vec<usize>,
    pub params: SequenceParams,
    pub run: SequenceRun,
}

impl Default for SequenceJob {
    fn default() -> Self {
        SequenceJob {
            items: vec![12, 40, 55],
            params: SequenceParams::default(),
            run: SequenceRun::default(),
        }
    }
}

/// Replay positions match the taught items, in order, within `tol` cells.
pub fn replay_matches(items: &[usize], outcome: &SequenceOutcome, tol: f64) -> bool {
    outcome.replay.len() == items.len()
        && outcome
            .replay
            .iter()
            .zip(items)
            .all(|(&pos, &loc)| (pos - loc as f64).abs() <= tol)
}

/// Margin between on-target and off-target plastic X, minimized over
/// items: mean X within +-2 of the taught location minus mean X further
/// than 4 cells away.
pub fn x_margin(items: &[usize], outcome: &SequenceOutcome) -> f64 {
    let mut margin = f64::INFINITY;
    for (k, &loc) in items.iter().enumerate() {
        let row = &outcome.x_matrix[k];
        let near_idx: Vec<usize> = (loc.saturating_sub(2)..=(loc + 2).min(row.len() - 1)).collect();
        let near: f64 = near_idx.iter().map(|&j| row[j]).sum::<f64>() / near_idx.len() as f64;
        let far_idx: Vec<usize> = (0..row.len())
            .filter(|&j| (j as i64 - loc as i64).abs() > 4)
            .collect();
        let far: f64 = far_idx.iter().map(|&j| row[j]).sum::<f64>() / far_idx.len() as f64;
        margin = margin.min(near - far);
    }
    margin
}

/// One learning+replay experiment per seed, parallel, sorted by seed.
pub fn run_batch(job: &SequenceJob, seeds: &[u64], jobs: usize) -> Result<Vec<(u64, SequenceOutcome)>> {
    let run = || -> Result<Vec<(u64, SequenceOutcome)>> {
        use rayon::prelude::*;
        let mut results = seeds
            .par_iter()
            .map(|&seed| {
                run_sequence_experiment(&job.items, seed, &job.params, &job.run)
                    .map(|o| (seed, o))
                    .map_err(|e| anyhow::anyhow!("sequence seed {seed} failed: {e:?}"))
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
