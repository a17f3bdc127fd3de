//! Behavioral models of the differential pair integrator (DPI) circuit.
//!
//! A DPI is a first-order log-domain integrator used for both synaptic and
//! membrane dynamics. Two integrators are provided: the full nonlinear
//! transfer function and its linear approximation, which is exact in
//! closed form and is what the chip emulator uses inside its fixed steps.

use libm::{exp, log};

/// Errors from parameter validation and stepping.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DynamicsError {
    /// A parameter violates its domain; names the offending field.
    InvalidParam(&'static str),
    NonPositiveDt,
    NegativeInput,
    NegativeWeight,
}

impl core::fmt::Display for DynamicsError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            DynamicsError::InvalidParam(field) => write!(f, "invalid parameter: {field}"),
            DynamicsError::NonPositiveDt => write!(f, "dt must be > 0"),
            DynamicsError::NegativeInput => write!(f, "input current must be >= 0"),
            DynamicsError::NegativeWeight => write!(f, "spike weight must be >= 0"),
        }
    }
}

impl core::error::Error for DynamicsError {}

/// Validity window for the derived time constant, in seconds.
///
/// Parameters whose tau falls outside the hard window are rejected;
/// outside the soft window they are accepted with a warning flag.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TauWindow {
    pub hard_min: f64,
    pub hard_max: f64,
    pub soft_min: f64,
    pub soft_max: f64,
}

impl Default for TauWindow {
    fn default() -> Self {
        Self {
            hard_min: 1e-3,
            hard_max: 1.0,
            soft_min: 5e-3,
            soft_max: 0.5,
        }
    }
}

/// Outcome of a parameter check.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TauStatus {
    Nominal,
    /// Tau is inside the hard window but outside the recommended band.
    OutsideSoftWindow,
}

/// Parameters of one DPI integrator. All quantities in SI units.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DpiParams {
    /// Integration capacitance, farads.
    pub capacitance: f64,
    /// Thermal voltage U_T, volts.
    pub thermal_voltage: f64,
    /// Subthreshold slope factor kappa, dimensionless in (0, 1).
    pub kappa: f64,
    /// Transistor dark current I_0, amperes; regularizes the nonlinear
    /// integrator near zero output.
    pub dark_current: f64,
    /// Leak current I_tau, amperes; sets the time constant.
    pub leak_current: f64,
    /// Gain current I_g, amperes.
    pub gain_current: f64,
}

impl Default for DpiParams {
    fn default() -> Self {
        // Typical subthreshold CMOS values; tau ~ 17.9 ms.
        Self {
            capacitance: 1e-12,
            thermal_voltage: 25e-3,
            kappa: 0.7,
            dark_current: 0.5e-12,
            leak_current: 2e-12,
            gain_current: 2e-12,
        }
    }
}

impl DpiParams {
    /// Check field domains without the tau-window check.
    pub fn check_fields(&self) -> Result<(), DynamicsError> {
        if !(self.capacitance > 0.0 && self.capacitance.is_finite()) {
            return Err(DynamicsError::InvalidParam("capacitance"));
        }
        if !(self.thermal_voltage > 0.0 && self.thermal_voltage.is_finite()) {
            return Err(DynamicsError::InvalidParam("thermal_voltage"));
        }
        if !(self.kappa > 0.0 && self.kappa < 1.0) {
            return Err(DynamicsError::InvalidParam("kappa"));
        }
        if !(self.dark_current > 0.0 && self.dark_current.is_finite()) {
            return Err(DynamicsError::InvalidParam("dark_current"));
        }
        if !(self.leak_current > 0.0 && self.leak_current.is_finite()) {
            return Err(DynamicsError::InvalidParam("leak_current"));
        }
        if !(self.gain_current > 0.0 && self.gain_current.is_finite()) {
            return Err(DynamicsError::InvalidParam("gain_current"));
        }
        Ok(())
    }

    /// Full validation including the tau window.
    pub fn validate(&self, window: &TauWindow) -> Result<TauStatus, DynamicsError> {
        self.check_fields()?;
        let tau = time_constant(self)?;
        if tau < window.hard_min || tau > window.hard_max {
            return Err(DynamicsError::InvalidParam("leak_current (tau outside window)"));
        }
        if tau < window.soft_min || tau > window.soft_max {
            Ok(TauStatus::OutsideSoftWindow)
        } else {
            Ok(TauStatus::Nominal)
        }
    }

    /// Gain ratio I_g / I_tau.
    #[inline]
    pub fn gain_ratio(&self) -> f64 {
        self.gain_current / self.leak_current
    }
}

/// State of one DPI integrator.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DpiState {
    /// Output current I_out, amperes; never negative.
    pub i_out: f64,
    /// Time of the last update, seconds.
    pub last_update_time: f64,
}

impl DpiState {
    pub fn at_rest(t: f64) -> Self {
        Self {
            i_out: 0.0,
            last_update_time: t,
        }
    }
}

/// Circuit time constant tau = C * U_T / (kappa * I_tau).
pub fn time_constant(p: &DpiParams) -> Result<f64, DynamicsError> {
    p.check_fields()?;
    Ok(p.capacitance * p.thermal_voltage / (p.kappa * p.leak_current))
}

/// Advance the full nonlinear DPI equation by `dt`.
///
/// Integrates tau * (1 + I_g/I_out) * dI/dt + I_out = I_g*I_in/I_tau - I_g
/// with explicit Euler sub-steps no longer than tau/100. The 1/I_out
/// singularity is regularized by evaluating I_g / max(I_out, I_0).
pub fn dpi_step_full(
    s: &DpiState,
    p: &DpiParams,
    i_in: f64,
    dt: f64,
) -> Result<DpiState, DynamicsError> {
    dpi_step_full_substep(s, p, i_in, dt, 100.0)
}

/// Like [`dpi_step_full`] with a caller-chosen sub-step divisor
/// (sub-step = tau / divisor). Used by the fine-step test oracles.
pub fn dpi_step_full_substep(
    s: &DpiState,
    p: &DpiParams,
    i_in: f64,
    dt: f64,
    divisor: f64,
) -> Result<DpiState, DynamicsError> {
    if !(dt > 0.0) {
        return Err(DynamicsError::NonPositiveDt);
    }
    if !(i_in >= 0.0) {
        return Err(DynamicsError::NegativeInput);
    }
    let tau = time_constant(p)?;
    let max_h = tau / divisor;
    let n = ceil_div_steps(dt, max_h);
    let h = dt / n as f64;
    let drive = p.gain_current * i_in / p.leak_current - p.gain_current;
    let mut i_out = s.i_out;
    for _ in 0..n {
        let slope_scale = 1.0 + p.gain_current / if i_out > p.dark_current { i_out } else { p.dark_current };
        let d = (drive - i_out) / (tau * slope_scale);
        i_out += h * d;
        if i_out < 0.0 {
            i_out = 0.0;
        }
    }
    Ok(DpiState {
        i_out,
        last_update_time: s.last_update_time + dt,
    })
}

/// Steady state of the full equation: I_g * (I_in/I_tau - 1), floored at 0.
pub fn full_steady_state(p: &DpiParams, i_in: f64) -> f64 {
    let ss = p.gain_current * (i_in / p.leak_current - 1.0);
    if ss > 0.0 {
        ss
    } else {
        0.0
    }
}

/// Steady state of the linear equation: (I_g/I_tau) * I_in.
pub fn linear_steady_state(p: &DpiParams, i_in: f64) -> f64 {
    p.gain_ratio() * i_in
}

/// Advance the linear DPI equation tau * dI/dt + I_out = (I_g/I_tau)*I_in
/// by `dt` in exact closed form, with I_in held constant over the step.
pub fn dpi_step_linear(
    s: &DpiState,
    p: &DpiParams,
    i_in: f64,
    dt: f64,
) -> Result<DpiState, DynamicsError> {
    if !(dt > 0.0) {
        return Err(DynamicsError::NonPositiveDt);
    }
    if !(i_in >= 0.0) {
        return Err(DynamicsError::NegativeInput);
    }
    let tau = time_constant(p)?;
    let i_ss = linear_steady_state(p, i_in);
    let i_out = i_ss + (s.i_out - i_ss) * exp(-dt / tau);
    Ok(DpiState {
        i_out: if i_out < 0.0 { 0.0 } else { i_out },
        last_update_time: s.last_update_time + dt,
    })
}

/// Instantaneous spike injection: I_out += weight * (I_g/I_tau) * I_w_unit.
///
/// The impulse approximation is the dt -> 0 limit of the linear equation
/// driven by a brief pulse, so simultaneous spikes add linearly.
pub fn dpi_inject_spike(
    s: &DpiState,
    p: &DpiParams,
    weight: f64,
    i_w_unit: f64,
) -> Result<DpiState, DynamicsError> {
    if !(weight >= 0.0) {
        return Err(DynamicsError::NegativeWeight);
    }
    Ok(DpiState {
        i_out: s.i_out + weight * p.gain_ratio() * i_w_unit,
        last_update_time: s.last_update_time,
    })
}

/// Leaky integrate-and-fire neuron parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NeuronParams {
    pub membrane: DpiParams,
    /// Spike threshold on the membrane current, amperes.
    pub spike_threshold: f64,
    /// Membrane current after a spike, amperes.
    pub reset_current: f64,
    /// Refractory period, seconds.
    pub refractory_period: f64,
}

impl Default for NeuronParams {
    fn default() -> Self {
        // Membrane tau ~ 35.7 ms.
        Self {
            membrane: DpiParams {
                capacitance: 2e-12,
                ..DpiParams::default()
            },
            spike_threshold: 30e-12,
            reset_current: 0.0,
            refractory_period: 2e-3,
        }
    }
}

impl NeuronParams {
    pub fn check(&self) -> Result<(), DynamicsError> {
        self.membrane.check_fields()?;
        if !(self.reset_current >= 0.0) {
            return Err(DynamicsError::InvalidParam("reset_current"));
        }
        if !(self.spike_threshold > self.reset_current) {
            return Err(DynamicsError::InvalidParam("spike_threshold"));
        }
        if !(self.refractory_period >= 0.0) {
            return Err(DynamicsError::InvalidParam("refractory_period"));
        }
        Ok(())
    }
}

/// Leaky integrate-and-fire neuron state.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct NeuronState {
    pub membrane: DpiState,
    /// No spike may be emitted before this time.
    pub refractory_until: f64,
    pub last_spike_time: Option<f64>,
}

/// Advance a neuron by `dt` under a constant input current.
///
/// The membrane integrates via the linear DPI equation; the threshold is
/// checked at the step end only, which keeps spike times on the step grid
/// and the simulation deterministic.
pub fn neuron_step(
    n: &NeuronState,
    p: &NeuronParams,
    input_current: f64,
    dt: f64,
) -> Result<(NeuronState, bool), DynamicsError> {
    let membrane = dpi_step_linear(&n.membrane, &p.membrane, input_current, dt)?;
    let now = membrane.last_update_time;
    let mut out = NeuronState {
        membrane,
        refractory_until: n.refractory_until,
        last_spike_time: n.last_spike_time,
    };
    if now < n.refractory_until {
        // membrane holds at reset while refractory
        out.membrane.i_out = p.reset_current;
        return Ok((out, false));
    }
    if out.membrane.i_out >= p.spike_threshold {
        out.membrane.i_out = p.reset_current;
        out.refractory_until = now + p.refractory_period;
        out.last_spike_time = Some(now);
        return Ok((out, true));
    }
    Ok((out, false))
}

fn ceil_div_steps(dt: f64, max_h: f64) -> u64 {
    let n = libm::ceil(dt / max_h);
    if n < 1.0 {
        1
    } else {
        n as u64
    }
}

/// Time for the linear equation to rise from `i0` to `target` under
/// constant steady state `i_ss`. Returns None when the target is
/// unreachable. Test oracle and latency analysis helper.
pub fn linear_crossing_time(i0: f64, i_ss: f64, target: f64) -> Option<f64> {
    if i_ss <= target {
        return None;
    }
    if target <= i0 {
        return Some(0.0);
    }
    // solves target = i_ss + (i0 - i_ss) exp(-t/tau) for t, in units of tau
    Some(log((i_ss - i0) / (i_ss - target)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(c: f64, u_t: f64, kappa: f64, i_tau: f64, i_g: f64) -> DpiParams {
        DpiParams {
            capacitance: c,
            thermal_voltage: u_t,
            kappa,
            dark_current: 0.5e-12,
            leak_current: i_tau,
            gain_current: i_g,
        }
    }

    // High-precision oracle for tau = C*U_T/(kappa*I_tau), evaluated in a
    // different association order than the implementation would suggest.
    fn tau_oracle(c: f64, u_t: f64, kappa: f64, i_tau: f64) -> f64 {
        (c / i_tau) * (u_t / kappa)
    }

    #[test]
    fn time_constant_examples() {
        let p = params(1e-12, 25e-3, 0.7, 1e-12, 1e-12);
        let tau = time_constant(&p).unwrap();
        assert!((tau - 35.714e-3).abs() < 1e-6, "tau {tau}");
        assert!((tau - tau_oracle(1e-12, 25e-3, 0.7, 1e-12)).abs() / tau < 1e-14);

        let p5 = params(1e-12, 25e-3, 0.7, 5e-12, 1e-12);
        let tau5 = time_constant(&p5).unwrap();
        assert!((tau5 - 7.143e-3).abs() < 1e-6, "tau {tau5}");
    }

    #[test]
    fn doubling_leak_halves_tau() {
        let p = params(3e-12, 28e-3, 0.66, 2e-12, 1e-12);
        let p2 = DpiParams {
            leak_current: 2.0 * p.leak_current,
            ..p
        };
        let (t1, t2) = (time_constant(&p).unwrap(), time_constant(&p2).unwrap());
        assert!((t1 / t2 - 2.0).abs() < 1e-12);
    }

    #[test]
    fn invalid_params_rejected() {
        let mut p = DpiParams::default();
        p.kappa = 1.5;
        assert_eq!(time_constant(&p), Err(DynamicsError::InvalidParam("kappa")));
        let mut p = DpiParams::default();
        p.leak_current = -1e-12;
        assert!(time_constant(&p).is_err());
    }

    #[test]
    fn tau_window_validation() {
        let w = TauWindow::default();
        // tau ~ 17.9 ms: nominal
        assert_eq!(DpiParams::default().validate(&w), Ok(TauStatus::Nominal));
        // tau ~ 3.6 ms: inside hard, outside soft
        let p = params(1e-12, 25e-3, 0.7, 10e-12, 1e-12);
        assert_eq!(p.validate(&w), Ok(TauStatus::OutsideSoftWindow));
        // tau ~ 0.36 ms: rejected
        let p = params(1e-13, 25e-3, 0.7, 10e-12, 1e-12);
        assert!(p.validate(&w).is_err());
    }

    #[test]
    fn full_fixed_point() {
        // dI/dt = 0 => I_out = I_g*(I_in/I_tau - 1)
        let p = params(1e-12, 25e-3, 0.7, 1e-12, 1e-12);
        let ss = full_steady_state(&p, 100e-12);
        assert!((ss - 99e-12).abs() / 99e-12 < 1e-12);
        // I_in = I_tau => steady state 0
        assert_eq!(full_steady_state(&p, 1e-12), 0.0);
    }

    #[test]
    fn full_reaches_linear_steady_state_within_2pct() {
        let p = params(1e-12, 25e-3, 0.7, 1e-12, 1e-12);
        let tau = time_constant(&p).unwrap();
        let i_in = 100.0 * p.leak_current;
        // fine-step oracle at tau/1e4
        let start = DpiState {
            i_out: p.dark_current,
            last_update_time: 0.0,
        };
        let oracle = dpi_step_full_substep(&start, &p, i_in, 10.0 * tau, 1e4).unwrap();
        let eq2 = linear_steady_state(&p, i_in);
        assert!(
            (oracle.i_out - eq2).abs() / eq2 < 0.02,
            "oracle {} vs eq2 {}",
            oracle.i_out,
            eq2
        );
        // default sub-stepping agrees with the fine-step oracle
        let coarse = dpi_step_full(&start, &p, i_in, 10.0 * tau).unwrap();
        assert!((coarse.i_out - oracle.i_out).abs() / oracle.i_out < 1e-3);
    }

    #[test]
    fn linear_step_examples() {
        let p = params(1e-12, 25e-3, 0.7, 1e-12, 1e-12);
        let tau = time_constant(&p).unwrap();
        // I_ss = 10 pA from zero over one tau: 10*(1 - 1/e) pA
        let s0 = DpiState::at_rest(0.0);
        let s1 = dpi_step_linear(&s0, &p, 10e-12, tau).unwrap();
        let expect = 10e-12 * (1.0 - exp(-1.0));
        assert!((s1.i_out - expect).abs() / expect < 1e-12);
        assert!((s1.i_out - 6.3212e-12).abs() < 1e-16);
        // zero input: pure decay
        let s2 = DpiState {
            i_out: 5e-12,
            last_update_time: 0.0,
        };
        let s3 = dpi_step_linear(&s2, &p, 0.0, 2.0 * tau).unwrap();
        assert!((s3.i_out - 5e-12 * exp(-2.0)).abs() < 1e-24);
    }

    #[test]
    fn linear_split_invariance() {
        let p = params(2e-12, 25e-3, 0.7, 3e-12, 2e-12);
        let s0 = DpiState {
            i_out: 4e-12,
            last_update_time: 0.0,
        };
        let dt = 7e-3;
        let one = dpi_step_linear(&s0, &p, 20e-12, dt).unwrap();
        let half = dpi_step_linear(&s0, &p, 20e-12, dt / 2.0).unwrap();
        let two = dpi_step_linear(&half, &p, 20e-12, dt / 2.0).unwrap();
        assert!((one.i_out - two.i_out).abs() / one.i_out < 1e-12);
    }

    #[test]
    fn inject_spike_examples() {
        let p = params(1e-12, 25e-3, 0.7, 1e-12, 1e-12);
        let i_w = 10e-12;
        let s0 = DpiState::at_rest(0.0);
        // zero weight: unchanged
        assert_eq!(dpi_inject_spike(&s0, &p, 0.0, i_w).unwrap(), s0);
        // additivity
        let a = dpi_inject_spike(&s0, &p, 0.7, i_w).unwrap();
        let ab = dpi_inject_spike(&a, &p, 1.3, i_w).unwrap();
        let sum = dpi_inject_spike(&s0, &p, 2.0, i_w).unwrap();
        assert!((ab.i_out - sum.i_out).abs() < 1e-30);
        // spike then decay matches closed form
        let tau = time_constant(&p).unwrap();
        let s = dpi_inject_spike(&s0, &p, 1.0, i_w).unwrap();
        let s = dpi_step_linear(&s, &p, 0.0, 0.5 * tau).unwrap();
        let expect = p.gain_ratio() * i_w * exp(-0.5);
        assert!((s.i_out - expect).abs() / expect < 1e-12);
        // negative weight rejected
        assert_eq!(
            dpi_inject_spike(&s0, &p, -1.0, i_w),
            Err(DynamicsError::NegativeWeight)
        );
    }

    #[test]
    fn neuron_never_spikes_without_drive() {
        let p = NeuronParams::default();
        let mut n = NeuronState::default();
        for _ in 0..1000 {
            let (next, spiked) = neuron_step(&n, &p, 0.0, 1e-4).unwrap();
            assert!(!spiked);
            n = next;
        }
        assert_eq!(n.membrane.i_out, 0.0);
    }

    #[test]
    fn neuron_periodic_spiking_interval() {
        // I_ss = 2*I_thr: interval ~ tau*ln(2) + refractory
        let p = NeuronParams::default();
        let tau = time_constant(&p.membrane).unwrap();
        let i_in = 2.0 * p.spike_threshold / p.membrane.gain_ratio();
        let dt = 1e-4;
        let mut n = NeuronState::default();
        let mut spikes = alloc::vec::Vec::new();
        let mut t = 0.0;
        while t < 1.0 {
            let (next, spiked) = neuron_step(&n, &p, i_in, dt).unwrap();
            n = next;
            t = n.membrane.last_update_time;
            if spiked {
                spikes.push(t);
            }
        }
        assert!(spikes.len() >= 5);
        let expected = tau * log(2.0) + p.refractory_period;
        for w in spikes.windows(2) {
            let interval = w[1] - w[0];
            assert!(
                (interval - expected).abs() <= dt + 1e-12,
                "interval {interval} expected {expected}"
            );
        }
    }

    #[test]
    fn refractory_blocks_spikes() {
        let p = NeuronParams {
            refractory_period: 10e-3,
            ..NeuronParams::default()
        };
        let i_in = 10.0 * p.spike_threshold / p.membrane.gain_ratio();
        let dt = 1e-4;
        let mut n = NeuronState::default();
        let mut spike_times = alloc::vec::Vec::new();
        let mut t = 0.0;
        while t < 0.1 {
            let (next, spiked) = neuron_step(&n, &p, i_in, dt).unwrap();
            n = next;
            t = n.membrane.last_update_time;
            if spiked {
                spike_times.push(t);
            }
        }
        for w in spike_times.windows(2) {
            assert!(w[1] - w[0] >= p.refractory_period - 1e-12);
        }
    }

    #[test]
    fn monotone_rise_toward_steady_state() {
        let p = DpiParams::default();
        let i_in = 50e-12;
        let i_ss = linear_steady_state(&p, i_in);
        let mut s = DpiState::at_rest(0.0);
        let mut prev = s.i_out;
        for _ in 0..500 {
            s = dpi_step_linear(&s, &p, i_in, 1e-4).unwrap();
            assert!(s.i_out >= prev && s.i_out <= i_ss);
            prev = s.i_out;
        }
    }

    #[test]
    fn full_integrator_tau_rise_time() {
        // time to 63.21% of I_ss in the linear regime ~ tau
        let p = params(1e-12, 25e-3, 0.7, 1e-12, 1e-12);
        let tau = time_constant(&p).unwrap();
        let i_in = 1000.0 * p.leak_current;
        let i_ss = full_steady_state(&p, i_in);
        let target = 0.6321 * i_ss;
        let h = tau / 100.0;
        let mut s = DpiState::at_rest(0.0);
        let mut t = 0.0;
        while s.i_out < target {
            s = dpi_step_full(&s, &p, i_in, h).unwrap();
            t += h;
            assert!(t < 5.0 * tau);
        }
        assert!((t - tau).abs() <= 2.0 * h, "t {t} tau {tau}");
    }
}
