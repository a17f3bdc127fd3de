//! Field simulation runs: drive a field with a Gaussian input for a
//! while, remove it, and record whether the bump survives or decays.

use anyhow::Result;
use neuroloop_core::fields::{
    detect_peaks, field_step, gaussian_input, FieldParams, FieldState, KernelParams, Peak,
};

#[derive(Clone, Debug)]
pub struct DnfRun {
    pub field: FieldParams,
    pub kernel: KernelParams,
    pub input_center: f64,
    pub input_sigma: f64,
    pub input_amplitude: f64,
    /// Seconds with the input on, then off, both in units of tau.
    pub on_tau: f64,
    pub off_tau: f64,
    /// Integration step in units of tau (must be <= 0.1).
    pub dt_tau: f64,
    /// Record every n-th step.
    pub record_every: usize,
}

impl DnfRun {
    pub fn new(field: FieldParams, kernel: KernelParams) -> Self {
        let center = field.grid_size as f64 / 2.0;
        DnfRun {
            field,
            kernel,
            input_center: center,
            input_sigma: 3.0,
            input_amplitude: 5.0,
            on_tau: 10.0,
            off_tau: 100.0,
            dt_tau: 0.05,
            record_every: 20,
        }
    }
}

#[derive(Clone, Debug)]
pub struct DnfTrace {
    /// (t, field activation) rows, subsampled.
    pub rows: Vec<(f64, Vec<f64>)>,
    /// Peaks above 0 in the final state.
    pub final_peaks: Vec<Peak>,
    pub final_max_u: f64,
    /// Max |u - h| over the field at the end, for decay checks.
    pub final_dev_from_rest: f64,
    pub tau: f64,
}

pub fn run_dnf(run: &DnfRun) -> Result<DnfTrace> {
    let p = &run.field;
    let dt = run.dt_tau * p.tau;
    let n_on = (run.on_tau / run.dt_tau).ceil() as usize;
    let n_off = (run.off_tau / run.dt_tau).ceil() as usize;
    let input_on = gaussian_input(
        p.grid_size,
        run.input_center,
        run.input_sigma,
        run.input_amplitude,
    );
    let input_off = vec![0.0; p.grid_size];

    let mut s = FieldState::at_rest(p);
    let mut rows = vec![(0.0, s.u.clone())];
    for k in 0..n_on + n_off {
        let input = if k < n_on { &input_on } else { &input_off };
        s = field_step(&s, p, &run.kernel, input, dt)
            .map_err(|e| anyhow::anyhow!("field step failed: {e:?}"))?;
        if (k + 1) % run.record_every == 0 {
            rows.push((s.t, s.u.clone()));
        }
    }
    let final_max_u = s.u.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let final_dev_from_rest = s
        .u
        .iter()
        .map(|u| (u - p.resting_level).abs())
        .fold(0.0, f64::max);
    Ok(DnfTrace {
        final_peaks: detect_peaks(&s.u, 0.0),
        rows,
        final_max_u,
        final_dev_from_rest,
        tau: p.tau,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use neuroloop_core::fields::{preset_decay, preset_selfsustain};

    #[test]
    fn selfsustain_holds_a_bump_100_tau() {
        let (f, k) = preset_selfsustain();
        let trace = run_dnf(&DnfRun::new(f, k)).unwrap();
        assert_eq!(trace.final_peaks.len(), 1);
        assert!((trace.final_peaks[0].position - 32.0).abs() < 2.0);
    }

    #[test]
    fn decay_returns_to_rest_within_5_tau() {
        let (f, k) = preset_decay();
        let mut run = DnfRun::new(f, k);
        run.input_amplitude = 2.0;
        run.off_tau = 5.0;
        let trace = run_dnf(&run).unwrap();
        assert!(trace.final_peaks.is_empty());
        // within 1% of h
        assert!(trace.final_dev_from_rest < 0.01 * f.resting_level.abs());
    }
}
