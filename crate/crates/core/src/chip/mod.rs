//! Event-driven emulator of a ROLLS-like mixed-signal neuromorphic
//! processor: 256 leaky integrate-and-fire neurons, a 256x512 synapse
//! array split into a plastic half and a fixed-weight half, AER input and
//! output, seeded device mismatch, a calcium-gated bistable plasticity
//! rule, and per-SOP energy accounting.
//!
//! The emulator advances a single global simulated time in fixed steps.
//! Events with timestamps inside a step are applied at the step start;
//! within a step synapse currents decay in closed form and membranes
//! integrate the summed excitatory-minus-inhibitory drive. Everything is
//! deterministic given (config, seed, input stream).

mod connectivity;

pub use connectivity::{Column, ConnectivityMatrix, Target, MAX_LEVEL, MIN_LEVEL};

use alloc::vec;
use alloc::vec::Vec;

use libm::exp;

use crate::dynamics::{
    self, DpiParams, DynamicsError, NeuronParams, NeuronState,
};
use crate::rng::SimRng;

/// Simulated time in integer microseconds.
pub type Micros = u64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EventKind {
    Input,
    Output,
}

/// Timestamped address event, the universal currency of chip I/O.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AerEvent {
    pub timestamp: Micros,
    /// Input events address a synapse routing entry; output events carry
    /// the source neuron index.
    pub address: u32,
    pub kind: EventKind,
}

impl AerEvent {
    pub fn input(timestamp: Micros, address: u32) -> Self {
        Self {
            timestamp,
            address,
            kind: EventKind::Input,
        }
    }

    pub fn output(timestamp: Micros, address: u32) -> Self {
        Self {
            timestamp,
            address,
            kind: EventKind::Output,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ChipError {
    /// A config field violates its domain; carries the field path.
    Config { field: &'static str },
    UnknownAddress(u32),
    BadTarget { neuron: u32 },
    ColumnsExhausted { neuron: u32 },
    BadWeightLevel(i8),
    UnsortedInput { index: usize },
    NotInputKind { index: usize },
    EventBeyondHorizon { timestamp: Micros },
    Dynamics(DynamicsError),
}

impl From<DynamicsError> for ChipError {
    fn from(e: DynamicsError) -> Self {
        ChipError::Dynamics(e)
    }
}

impl core::fmt::Display for ChipError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            ChipError::Config { field } => write!(f, "invalid config field: {field}"),
            ChipError::UnknownAddress(a) => write!(f, "unknown input address {a}"),
            ChipError::BadTarget { neuron } => write!(f, "routing target neuron {neuron} out of range"),
            ChipError::ColumnsExhausted { neuron } => {
                write!(f, "no free synapse column left on neuron {neuron}")
            }
            ChipError::BadWeightLevel(l) => write!(f, "static weight level {l} out of range"),
            ChipError::UnsortedInput { index } => {
                write!(f, "input stream not sorted at event {index}")
            }
            ChipError::NotInputKind { index } => {
                write!(f, "event {index} is not an input event")
            }
            ChipError::EventBeyondHorizon { timestamp } => {
                write!(f, "input event at {timestamp} us is beyond the advance horizon")
            }
            ChipError::Dynamics(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for ChipError {}

/// Calcium-gated bistable stop-learning plasticity parameters.
///
/// Each neuron carries a calcium trace bumped on its own spikes. A
/// presynaptic spike at an enabled plastic column potentiates X when the
/// postsynaptic membrane is high and calcium sits in the up-band,
/// depresses it when calcium sits in the down-band, and otherwise leaves
/// it alone. Between events X drifts toward the nearest bistable state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlasticityParams {
    /// Potentiation jump on X per qualifying presynaptic spike.
    pub a: f64,
    /// Depression jump on X per qualifying presynaptic spike.
    pub b: f64,
    /// Drift rate toward the nearest bistable state, 1/s.
    pub drift_rate: f64,
    /// Calcium trace time constant, seconds.
    pub calcium_tau: f64,
    /// Calcium increment per postsynaptic spike.
    pub calcium_jump: f64,
    pub theta_up_low: f64,
    pub theta_up_high: f64,
    pub theta_down_low: f64,
    pub theta_down_high: f64,
    /// Membrane current gate for potentiation, amperes.
    pub membrane_theta: f64,
    /// Efficacious weight when X < 0.5.
    pub w_low: f64,
    /// Efficacious weight when X >= 0.5.
    pub w_high: f64,
}

impl Default for PlasticityParams {
    fn default() -> Self {
        Self {
            a: 0.1,
            b: 0.1,
            drift_rate: 0.05,
            calcium_tau: 50e-3,
            calcium_jump: 1.0,
            theta_up_low: 1.0,
            theta_up_high: 1e12,
            theta_down_low: 0.2,
            theta_down_high: 1.0,
            membrane_theta: 0.0,
            w_low: 0.0,
            w_high: 3.0,
        }
    }
}

impl PlasticityParams {
    pub fn check(&self) -> Result<(), ChipError> {
        if !(self.a >= 0.0 && self.b >= 0.0) {
            return Err(ChipError::Config { field: "plasticity.a/b" });
        }
        if !(self.drift_rate >= 0.0) {
            return Err(ChipError::Config { field: "plasticity.drift_rate" });
        }
        if !(self.calcium_tau > 0.0) {
            return Err(ChipError::Config { field: "plasticity.calcium_tau" });
        }
        if !(0.0 <= self.w_low && self.w_low < self.w_high) {
            return Err(ChipError::Config { field: "plasticity.w_low/w_high" });
        }
        if !(self.theta_up_low <= self.theta_up_high
            && self.theta_down_low <= self.theta_down_high)
        {
            return Err(ChipError::Config { field: "plasticity.theta bands" });
        }
        if self.theta_down_high > self.theta_up_low {
            return Err(ChipError::Config { field: "plasticity.theta bands overlap" });
        }
        Ok(())
    }
}

/// Full chip configuration. Defaults mirror the 256-neuron, 256+256
/// column device; all sizes may be scaled down for toy tests.
#[derive(Clone, Debug, PartialEq)]
pub struct ChipConfig {
    pub n_neurons: usize,
    pub n_plastic_cols: usize,
    pub n_static_cols: usize,
    /// Number of distinct external input addresses.
    pub n_inputs: usize,
    /// Global step, seconds.
    pub dt: f64,
    /// Coefficient of variation of the lognormal device mismatch.
    pub mismatch_cv: f64,
    pub seed: u64,
    /// Energy per synaptic operation, joules.
    pub energy_per_sop: f64,
    /// Unit charge-current per weight level, amperes.
    pub i_w_unit: f64,
    pub neuron: NeuronParams,
    pub syn_exc: DpiParams,
    pub syn_inh: DpiParams,
    pub plasticity: PlasticityParams,
}

impl Default for ChipConfig {
    fn default() -> Self {
        Self {
            n_neurons: 256,
            n_plastic_cols: 256,
            n_static_cols: 256,
            n_inputs: 512,
            dt: 1e-4,
            mismatch_cv: 0.10,
            seed: 0,
            energy_per_sop: 77e-15,
            i_w_unit: 10e-12,
            neuron: NeuronParams::default(),
            syn_exc: DpiParams::default(),
            syn_inh: DpiParams::default(),
            plasticity: PlasticityParams::default(),
        }
    }
}

impl ChipConfig {
    pub fn validate(&self) -> Result<(), ChipError> {
        if self.n_neurons == 0 || self.n_neurons > u16::MAX as usize {
            return Err(ChipError::Config { field: "n_neurons" });
        }
        if self.n_plastic_cols + self.n_static_cols == 0 {
            return Err(ChipError::Config { field: "n_plastic_cols+n_static_cols" });
        }
        if !(self.dt > 0.0 && self.dt >= 1e-6) {
            return Err(ChipError::Config { field: "dt" });
        }
        if !(0.0..=0.5).contains(&self.mismatch_cv) {
            return Err(ChipError::Config { field: "mismatch_cv" });
        }
        if !(self.energy_per_sop >= 0.0) {
            return Err(ChipError::Config { field: "energy_per_sop" });
        }
        if !(self.i_w_unit > 0.0) {
            return Err(ChipError::Config { field: "i_w_unit" });
        }
        self.neuron.check().map_err(|_| ChipError::Config { field: "neuron" })?;
        self.syn_exc
            .check_fields()
            .map_err(|_| ChipError::Config { field: "syn_exc" })?;
        self.syn_inh
            .check_fields()
            .map_err(|_| ChipError::Config { field: "syn_inh" })?;
        self.plasticity.check()?;
        Ok(())
    }

    pub fn total_cols(&self) -> usize {
        self.n_plastic_cols + self.n_static_cols
    }

    /// Step length in integer microseconds.
    pub fn dt_us(&self) -> Micros {
        let us = libm::round(self.dt * 1e6);
        if us < 1.0 {
            1
        } else {
            us as Micros
        }
    }
}

/// Per-neuron and per-synapse multiplicative mismatch factors, lognormal
/// with the configured coefficient of variation, deterministic per seed.
#[derive(Clone, Debug)]
pub struct MismatchModel {
    /// Per-neuron factor on the membrane and synapse time constants.
    pub tau: Vec<f64>,
    /// Per-neuron factor on the spike threshold.
    pub threshold: Vec<f64>,
    /// Per-synapse factor on the unit weight current, `[neuron][column]`.
    pub w_unit: Vec<f64>,
}

impl MismatchModel {
    pub fn generate(n_neurons: usize, n_cols: usize, cv: f64, seed: u64) -> Self {
        let mut rng = SimRng::new(seed).fork(0x6D69_736D); // mismatch stream
        let tau = (0..n_neurons).map(|_| rng.lognormal_factor(cv)).collect();
        let threshold = (0..n_neurons).map(|_| rng.lognormal_factor(cv)).collect();
        let w_unit = (0..n_neurons * n_cols)
            .map(|_| rng.lognormal_factor(cv))
            .collect();
        Self {
            tau,
            threshold,
            w_unit,
        }
    }
}

/// SOP counter and exact energy product.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EnergyMeter {
    pub sop_count: u64,
    pub energy_per_sop: f64,
}

impl EnergyMeter {
    pub fn total_energy(&self) -> f64 {
        self.sop_count as f64 * self.energy_per_sop
    }
}

/// Energy readout returned by [`Chip::energy_report`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyReport {
    pub sop_count: u64,
    pub total_energy: f64,
}

/// The chip emulator state.
#[derive(Clone, Debug)]
pub struct Chip {
    cfg: ChipConfig,
    conn: ConnectivityMatrix,
    mismatch: MismatchModel,
    now_us: Micros,
    /// Per-neuron mismatched parameter copies (tau via capacitance so the
    /// gain ratio is untouched; threshold scaled directly).
    neuron_params: Vec<NeuronParams>,
    syn_exc_params: Vec<DpiParams>,
    syn_inh_params: Vec<DpiParams>,
    neurons: Vec<NeuronState>,
    /// Aggregated synaptic DPI output currents. All excitatory synapses
    /// of a neuron share one time constant, so their summed current obeys
    /// the same linear equation and is tracked as a single state.
    syn_exc: Vec<f64>,
    syn_inh: Vec<f64>,
    /// Per-neuron constant bias drive, amperes.
    bias: Vec<f64>,
    calcium: Vec<f64>,
    /// Per-full-step closed-form decay factors.
    exc_decay: Vec<f64>,
    inh_decay: Vec<f64>,
    ca_decay: f64,
    energy: EnergyMeter,
    raster: Vec<(Micros, u16)>,
    /// Recurrent spikes produced in the current step, delivered at the
    /// start of the next one.
    pending_recurrent: Vec<u16>,
}

impl Chip {
    /// Instantiate all neuron and synapse state with mismatch applied.
    /// The chip starts at time 0 with all currents at 0.
    pub fn build(cfg: ChipConfig, conn: ConnectivityMatrix) -> Result<Self, ChipError> {
        cfg.validate()?;
        if conn.n_neurons() != cfg.n_neurons
            || conn.n_static() != cfg.n_static_cols
            || conn.n_plastic() != cfg.n_plastic_cols
        {
            return Err(ChipError::Config { field: "connectivity dimensions" });
        }
        let n = cfg.n_neurons;
        let mismatch = MismatchModel::generate(n, cfg.total_cols(), cfg.mismatch_cv, cfg.seed);
        let mut neuron_params = Vec::with_capacity(n);
        let mut syn_exc_params = Vec::with_capacity(n);
        let mut syn_inh_params = Vec::with_capacity(n);
        let mut exc_decay = Vec::with_capacity(n);
        let mut inh_decay = Vec::with_capacity(n);
        for i in 0..n {
            let f = mismatch.tau[i];
            let np = NeuronParams {
                membrane: DpiParams {
                    capacitance: cfg.neuron.membrane.capacitance * f,
                    ..cfg.neuron.membrane
                },
                spike_threshold: cfg.neuron.spike_threshold * mismatch.threshold[i],
                ..cfg.neuron
            };
            let se = DpiParams {
                capacitance: cfg.syn_exc.capacitance * f,
                ..cfg.syn_exc
            };
            let si = DpiParams {
                capacitance: cfg.syn_inh.capacitance * f,
                ..cfg.syn_inh
            };
            exc_decay.push(exp(-cfg.dt / dynamics::time_constant(&se)?));
            inh_decay.push(exp(-cfg.dt / dynamics::time_constant(&si)?));
            neuron_params.push(np);
            syn_exc_params.push(se);
            syn_inh_params.push(si);
        }
        let ca_decay = exp(-cfg.dt / cfg.plasticity.calcium_tau);
        Ok(Self {
            energy: EnergyMeter {
                sop_count: 0,
                energy_per_sop: cfg.energy_per_sop,
            },
            mismatch,
            conn,
            now_us: 0,
            neuron_params,
            syn_exc_params,
            syn_inh_params,
            neurons: vec![NeuronState::default(); n],
            syn_exc: vec![0.0; n],
            syn_inh: vec![0.0; n],
            bias: vec![0.0; n],
            calcium: vec![0.0; n],
            exc_decay,
            inh_decay,
            ca_decay,
            raster: Vec::new(),
            pending_recurrent: Vec::new(),
            cfg,
        })
    }

    pub fn config(&self) -> &ChipConfig {
        &self.cfg
    }

    pub fn connectivity(&self) -> &ConnectivityMatrix {
        &self.conn
    }

    pub fn mismatch(&self) -> &MismatchModel {
        &self.mismatch
    }

    pub fn now_us(&self) -> Micros {
        self.now_us
    }

    pub fn membrane_current(&self, neuron: u16) -> f64 {
        self.neurons[neuron as usize].membrane.i_out
    }

    pub fn calcium(&self, neuron: u16) -> f64 {
        self.calcium[neuron as usize]
    }

    /// Constant bias drive injected into a neuron's membrane, amperes.
    pub fn set_bias(&mut self, neuron: u16, current: f64) {
        self.bias[neuron as usize] = current;
    }

    /// Effective weight of a column: static level (signed, in unit
    /// weights) or the binary plastic weight.
    fn column_weight(&self, neuron: u16, column: Column) -> (f64, bool) {
        match column {
            Column::Static(c) => {
                let level = self.conn.static_level(neuron, c);
                (level.unsigned_abs() as f64, level >= 0)
            }
            Column::Plastic(c) => {
                let x = self.conn.plastic_state(neuron, c);
                let w = if x < 0.5 {
                    self.cfg.plasticity.w_low
                } else {
                    self.cfg.plasticity.w_high
                };
                (w, true)
            }
        }
    }

    fn column_flat_index(&self, neuron: u16, column: Column) -> usize {
        let base = neuron as usize * self.cfg.total_cols();
        match column {
            Column::Static(c) => base + c as usize,
            Column::Plastic(c) => base + self.cfg.n_static_cols + c as usize,
        }
    }

    /// Deliver one spike to one column: inject into the target's synapse
    /// DPI, count one SOP, and run the plasticity rule on plastic columns.
    fn deliver(&mut self, target: Target) {
        let Target { neuron, column } = target;
        let n = neuron as usize;
        let (weight, excitatory) = self.column_weight(neuron, column);
        let w_factor = self.mismatch.w_unit[self.column_flat_index(neuron, column)];
        if weight > 0.0 {
            let (params, state) = if excitatory {
                (&self.syn_exc_params[n], &mut self.syn_exc[n])
            } else {
                (&self.syn_inh_params[n], &mut self.syn_inh[n])
            };
            *state += weight * params.gain_ratio() * self.cfg.i_w_unit * w_factor;
        }
        self.energy.sop_count += 1;
        if let Column::Plastic(c) = column {
            self.update_plasticity(neuron, c);
        }
    }

    /// Stop-learning rule applied on a presynaptic spike at a plastic
    /// column: potentiate when the postsynaptic membrane and calcium are
    /// high, depress in the low-calcium band, otherwise leave X alone.
    fn update_plasticity(&mut self, neuron: u16, col: u16) {
        if !self.conn.is_plastic_enabled(neuron, col) {
            return;
        }
        let p = self.cfg.plasticity;
        let ca = self.calcium[neuron as usize];
        let membrane = self.neurons[neuron as usize].membrane.i_out;
        let x = self.conn.plastic_x_mut(neuron, col);
        if membrane >= p.membrane_theta && (p.theta_up_low..=p.theta_up_high).contains(&ca) {
            *x = (*x + p.a).clamp(0.0, 1.0);
        } else if (p.theta_down_low..=p.theta_down_high).contains(&ca) {
            *x = (*x - p.b).clamp(0.0, 1.0);
        }
    }

    /// Route one external input event to all its targets immediately.
    /// Returns the number of SOPs performed (the fan-out).
    pub fn route_event(&mut self, e: &AerEvent) -> Result<u64, ChipError> {
        if e.kind != EventKind::Input {
            return Err(ChipError::NotInputKind { index: 0 });
        }
        let targets: Vec<Target> = self.conn.input_targets(e.address)?.to_vec();
        for t in &targets {
            self.deliver(*t);
        }
        Ok(targets.len() as u64)
    }

    /// Advance simulated time to `until` (exclusive of further steps once
    /// reached), applying the sorted input stream. Returns the output
    /// spikes produced, timestamped at the start of the step in which
    /// they occurred.
    pub fn advance(&mut self, until: Micros, input: &[AerEvent]) -> Result<Vec<AerEvent>, ChipError> {
        for (i, e) in input.iter().enumerate() {
            if e.kind != EventKind::Input {
                return Err(ChipError::NotInputKind { index: i });
            }
            if i > 0 && e.timestamp < input[i - 1].timestamp {
                return Err(ChipError::UnsortedInput { index: i });
            }
            if e.timestamp >= until {
                return Err(ChipError::EventBeyondHorizon { timestamp: e.timestamp });
            }
            // validate addresses up front so no partial state change occurs
            self.conn.input_targets(e.address)?;
        }
        let dt_us = self.cfg.dt_us();
        let mut out = Vec::new();
        let mut idx = 0;
        let mut spikes: Vec<u16> = Vec::new();
        while self.now_us < until {
            let step_start = self.now_us;
            let step_end = (step_start + dt_us).min(until);
            let h = (step_end - step_start) as f64 * 1e-6;
            let full_step = step_end - step_start == dt_us;

            // recurrent spikes from the previous step land first
            let pending = core::mem::take(&mut self.pending_recurrent);
            for src in pending {
                let targets: Vec<Target> = self.conn.recurrent_targets(src).to_vec();
                for t in targets {
                    self.deliver(t);
                }
            }
            // input events quantized to the step start
            while idx < input.len() && input[idx].timestamp < step_end {
                let targets: Vec<Target> = self.conn.input_targets(input[idx].address)?.to_vec();
                for t in targets {
                    self.deliver(t);
                }
                idx += 1;
            }

            // membrane integration and threshold check
            spikes.clear();
            for i in 0..self.cfg.n_neurons {
                let drive = (self.syn_exc[i] - self.syn_inh[i] + self.bias[i]).max(0.0);
                let (next, spiked) =
                    dynamics::neuron_step(&self.neurons[i], &self.neuron_params[i], drive, h)?;
                self.neurons[i] = next;
                if spiked {
                    spikes.push(i as u16);
                }
            }
            for &s in &spikes {
                out.push(AerEvent::output(step_start, s as u32));
                self.raster.push((step_start, s));
                self.calcium[s as usize] += self.cfg.plasticity.calcium_jump;
                if !self.conn.recurrent_targets(s).is_empty() {
                    self.pending_recurrent.push(s);
                }
            }

            // closed-form decays and plastic drift
            for i in 0..self.cfg.n_neurons {
                if full_step {
                    self.syn_exc[i] *= self.exc_decay[i];
                    self.syn_inh[i] *= self.inh_decay[i];
                    self.calcium[i] *= self.ca_decay;
                } else {
                    self.syn_exc[i] *=
                        exp(-h / dynamics::time_constant(&self.syn_exc_params[i])?);
                    self.syn_inh[i] *=
                        exp(-h / dynamics::time_constant(&self.syn_inh_params[i])?);
                    self.calcium[i] *= exp(-h / self.cfg.plasticity.calcium_tau);
                }
            }
            let drift = self.cfg.plasticity.drift_rate * h;
            if drift > 0.0 {
                self.conn.drift_plastic(drift);
            }

            self.now_us = step_end;
        }
        Ok(out)
    }

    pub fn energy_report(&self) -> EnergyReport {
        EnergyReport {
            sop_count: self.energy.sop_count,
            total_energy: self.energy.total_energy(),
        }
    }

    /// All output spikes so far in time order, ties broken by neuron index.
    pub fn read_raster(&self) -> &[(Micros, u16)] {
        &self.raster
    }

    /// Mean plastic X over a rectangle of (pre-range irrelevant) columns
    /// on the given neurons. Readout helper for learning experiments.
    pub fn plastic_x(&self, neuron: u16, col: u16) -> f64 {
        self.conn.plastic_state(neuron, col)
    }
}

#[cfg(test)]
mod tests;
