//! Spiking winner-take-all experiments: two-target selection against the
//! continuous-field oracle, and the noise-reduction property.

use neuroloop_core::chip::{AerEvent, Chip, ChipConfig, ConnectivityMatrix, Micros};
use neuroloop_core::fields::{
    self, compile_wta, detect_peaks, field_step, FieldState, KernelParams, WtaLayout, WtaSpec,
};
use neuroloop_core::rng::SimRng;

use super::streams::{gaussian_stream, mean_std, merge_sorted, uniform_stream};

/// A compiled spiking WTA rig: excitatory pool at neuron indices
/// `0..n_exc`, inhibitory pool right after it, one input address per
/// excitatory neuron.
#[derive(Clone, Debug)]
pub struct WtaRig {
    pub spec: WtaSpec,
    /// Static weight level of each input -> excitatory neuron synapse.
    pub input_level: i8,
    pub mismatch_cv: f64,
}

impl Default for WtaRig {
    fn default() -> Self {
        Self {
            spec: WtaSpec {
                n_exc: 64,
                n_inh: 16,
                kernel: KernelParams {
                    a_exc: 3.0,
                    a_inh: 1.0, // realized by the inhibitory pool, not sampled
                    sigma_exc: 2.5,
                    sigma_inh: 24.0,
                },
                exc_to_inh: 1,
                inh_to_exc: -1,
                self_exc: 2,
            },
            input_level: 3,
            mismatch_cv: 0.10,
        }
    }
}

impl WtaRig {
    pub fn n_exc(&self) -> usize {
        self.spec.n_exc
    }

    pub fn build_chip(&self, seed: u64) -> Chip {
        let n_neurons = self.spec.n_exc + self.spec.n_inh;
        let cfg = ChipConfig {
            n_neurons,
            n_inputs: self.spec.n_exc,
            mismatch_cv: self.mismatch_cv,
            seed,
            ..ChipConfig::default()
        };
        let mut conn = ConnectivityMatrix::new(
            cfg.n_neurons,
            cfg.n_static_cols,
            cfg.n_plastic_cols,
            cfg.n_inputs,
        );
        compile_wta(
            &self.spec,
            WtaLayout {
                exc_start: 0,
                inh_start: self.spec.n_exc as u16,
            },
            &mut conn,
        )
        .expect("rig layout fits");
        for a in 0..self.spec.n_exc {
            conn.route_input_static(a as u32, a as u16, self.input_level)
                .expect("input routing fits");
        }
        Chip::build(cfg, conn).expect("rig config valid")
    }
}

/// Continuous-field winner for a per-column input rate profile: simulate
/// the matched field to steady state and return the surviving peak
/// position, if any.
pub fn continuous_winner(rates_hz: &[f64], input_gain: f64) -> Option<f64> {
    let (mut p, k) = fields::preset_selfsustain();
    p.grid_size = rates_hz.len();
    let input: Vec<f64> = rates_hz.iter().map(|r| r * input_gain).collect();
    let dt = p.tau / 20.0;
    let mut s = FieldState::at_rest(&p);
    for _ in 0..(30 * 20) {
        s = field_step(&s, &p, &k, &input, dt).expect("oracle field step");
    }
    let peaks = detect_peaks(&s.u, 0.0);
    peaks
        .iter()
        .max_by(|a, b| a.value.total_cmp(&b.value))
        .map(|p| p.position)
}

/// Per-column event counts converted to rates in Hz.
pub fn column_rates(events: &[AerEvent], n_cols: usize, duration_s: f64) -> Vec<f64> {
    let mut counts = vec![0.0; n_cols];
    for e in events {
        counts[e.address as usize] += 1.0;
    }
    counts.iter().map(|c| c / duration_s).collect()
}

#[derive(Clone, Debug)]
pub struct TwoTargetOutcome {
    /// Stronger-target location (cells).
    pub loc_strong: f64,
    pub loc_weak: f64,
    /// Output-rate argmax location of the spiking run, second half of the
    /// trial only, excitatory pool only.
    pub spiking_winner: Option<f64>,
    /// Peak position of the continuous-field oracle on the same input.
    pub continuous_winner: Option<f64>,
    pub input_events: Vec<AerEvent>,
    pub output_events: Vec<AerEvent>,
}

impl TwoTargetOutcome {
    fn nearest(loc: f64, a: f64, b: f64) -> f64 {
        if (loc - a).abs() <= (loc - b).abs() {
            a
        } else {
            b
        }
    }

    /// True when the spiking winner and the oracle pick the same target.
    pub fn agree(&self) -> bool {
        match (self.spiking_winner, self.continuous_winner) {
            (Some(s), Some(c)) => {
                Self::nearest(s, self.loc_strong, self.loc_weak)
                    == Self::nearest(c, self.loc_strong, self.loc_weak)
            }
            _ => false,
        }
    }

    /// True when the spiking winner sits at the stronger target.
    pub fn spiking_picks_strong(&self) -> bool {
        self.spiking_winner
            .is_some_and(|s| Self::nearest(s, self.loc_strong, self.loc_weak) == self.loc_strong)
    }
}

/// Drive the rig with two Gaussian event streams of different rates and
/// report both the spiking winner and the continuous-field oracle winner.
pub fn run_two_target(
    rig: &WtaRig,
    seed: u64,
    loc_strong: f64,
    loc_weak: f64,
    rate_strong_hz: f64,
    rate_weak_hz: f64,
    duration_s: f64,
) -> TwoTargetOutcome {
    let n = rig.n_exc();
    let t1 = (duration_s * 1e6) as Micros;
    let mut rng = SimRng::new(seed).fork(0x77A7);
    let sa = gaussian_stream(&mut rng, n, loc_strong, 1.5, rate_strong_hz, 0, t1);
    let sb = gaussian_stream(&mut rng, n, loc_weak, 1.5, rate_weak_hz, 0, t1);
    let input = merge_sorted(vec![sa, sb]);
    let mut chip = rig.build_chip(seed);
    let output = chip.advance(t1, &input).expect("wta run");

    let half = t1 / 2;
    let mut counts = vec![0u32; n];
    for e in &output {
        if e.timestamp >= half && (e.address as usize) < n {
            counts[e.address as usize] += 1;
        }
    }
    let spiking_winner = counts
        .iter()
        .enumerate()
        .max_by_key(|(_, &c)| c)
        .and_then(|(i, &c)| (c > 0).then_some(i as f64));

    let rates = column_rates(&input, n, duration_s);
    // gain chosen so a 100 Hz stream maps to a field input amplitude ~ 4
    let continuous = continuous_winner(&rates, 0.04 * 2.5);

    TwoTargetOutcome {
        loc_strong,
        loc_weak,
        spiking_winner,
        continuous_winner: continuous,
        input_events: input,
        output_events: output,
    }
}

#[derive(Clone, Debug)]
pub struct NoiseOutcome {
    pub input_std: f64,
    pub output_std: f64,
    pub input_events: Vec<AerEvent>,
    pub output_events: Vec<AerEvent>,
}

impl NoiseOutcome {
    pub fn reduced(&self) -> bool {
        self.output_std.is_finite() && self.output_std < self.input_std
    }
}

/// Feed the rig a noisy stream (Gaussian spatial profile plus a uniform
/// background making up `bg_fraction` of all events) and compare the
/// spatial spread of output spikes against input events.
/// Default two-target trial: targets at cells 16 and 48, 300 Hz vs 200 Hz.
pub fn run_two_target_default(rig: &WtaRig, seed: u64) -> TwoTargetOutcome {
    run_two_target(rig, seed, 16.0, 48.0, 300.0, 200.0, 1.0)
}

/// Default noise trial: bump at cell 32 with sigma 4, 400 Hz total with a
/// 30% uniform background.
pub fn run_noise_reduction_default(rig: &WtaRig, seed: u64) -> NoiseOutcome {
    run_noise_reduction(rig, seed, 32.0, 4.0, 400.0, 0.3, 1.0)
}

pub fn run_noise_reduction(
    rig: &WtaRig,
    seed: u64,
    center: f64,
    sigma_in: f64,
    total_rate_hz: f64,
    bg_fraction: f64,
    duration_s: f64,
) -> NoiseOutcome {
    let n = rig.n_exc();
    let t1 = (duration_s * 1e6) as Micros;
    let mut rng = SimRng::new(seed).fork(0x4E01);
    let signal = gaussian_stream(
        &mut rng,
        n,
        center,
        sigma_in,
        total_rate_hz * (1.0 - bg_fraction),
        0,
        t1,
    );
    let bg = uniform_stream(&mut rng, n, total_rate_hz * bg_fraction, 0, t1);
    let input = merge_sorted(vec![signal, bg]);
    let mut chip = rig.build_chip(seed);
    let output = chip.advance(t1, &input).expect("wta run");

    let (_, input_std) = mean_std(input.iter().map(|e| e.address as f64));
    let (_, output_std) = mean_std(
        output
            .iter()
            .filter(|e| (e.address as usize) < n)
            .map(|e| e.address as f64),
    );
    NoiseOutcome {
        input_std,
        output_std,
        input_events: input,
        output_events: output,
    }
}
