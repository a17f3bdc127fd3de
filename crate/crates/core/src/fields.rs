//! Dynamic neural field engine and the winner-take-all compiler.
//!
//! The field integrates
//!   tau * du/dt = -u + h + I + conv(f(u), w)
//! over a 1-D feature grid with a Mexican-hat interaction kernel, and
//! `compile_wta` maps the same lateral-interaction structure onto chip
//! connectivity: Gaussian excitation between neighbors in the excitatory
//! pool plus a shared inhibitory pool.

use alloc::vec;
use alloc::vec::Vec;

use libm::{exp, fabs, round};

use crate::chip::{ChipError, ConnectivityMatrix, MAX_LEVEL, MIN_LEVEL};

#[derive(Clone, Debug, PartialEq)]
pub enum FieldError {
    InvalidParam(&'static str),
    /// dt exceeds the tau/10 stability guard.
    DtTooLarge,
    /// The state or input contains NaN or infinity.
    NonFinite,
}

impl core::fmt::Display for FieldError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            FieldError::InvalidParam(p) => write!(f, "invalid field parameter: {p}"),
            FieldError::DtTooLarge => write!(f, "dt exceeds tau/10 stability guard"),
            FieldError::NonFinite => write!(f, "field state or input is not finite"),
        }
    }
}

impl core::error::Error for FieldError {}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Boundary {
    /// Activity outside the grid treated as absent (robot field of view).
    ZeroPadded,
    /// Wrap-around distances (heading-like spaces).
    Periodic,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldParams {
    /// Field time constant, seconds.
    pub tau: f64,
    /// Negative resting level h.
    pub resting_level: f64,
    pub grid_size: usize,
    /// Feature units per cell.
    pub dx: f64,
    pub boundary: Boundary,
    /// Steepness of the logistic output nonlinearity.
    pub sigmoid_beta: f64,
}

impl FieldParams {
    pub fn check(&self) -> Result<(), FieldError> {
        if !(self.tau > 0.0) {
            return Err(FieldError::InvalidParam("tau"));
        }
        if !(self.resting_level < 0.0) {
            return Err(FieldError::InvalidParam("resting_level"));
        }
        if self.grid_size < 3 {
            return Err(FieldError::InvalidParam("grid_size"));
        }
        if !(self.dx > 0.0) {
            return Err(FieldError::InvalidParam("dx"));
        }
        if !(self.sigmoid_beta > 0.0) {
            return Err(FieldError::InvalidParam("sigmoid_beta"));
        }
        Ok(())
    }
}

/// Mexican-hat (difference of Gaussians) interaction kernel parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelParams {
    pub a_exc: f64,
    pub a_inh: f64,
    pub sigma_exc: f64,
    pub sigma_inh: f64,
}

impl KernelParams {
    pub fn check(&self) -> Result<(), FieldError> {
        if !(self.a_exc >= 0.0 && self.a_inh >= 0.0) {
            return Err(FieldError::InvalidParam("kernel amplitudes"));
        }
        if !(self.sigma_exc > 0.0 && self.sigma_inh > 0.0) {
            return Err(FieldError::InvalidParam("kernel sigmas"));
        }
        Ok(())
    }

    /// True when the spreads give the Mexican-hat shape. Violations are
    /// accepted with a warning at config level, not rejected.
    pub fn is_mexican_hat(&self) -> bool {
        self.sigma_inh > self.sigma_exc
    }
}

/// Discretized field activation u(x, t).
#[derive(Clone, Debug, PartialEq)]
pub struct FieldState {
    pub u: Vec<f64>,
    pub t: f64,
}

impl FieldState {
    /// Field at the resting level.
    pub fn at_rest(p: &FieldParams) -> Self {
        Self {
            u: vec![p.resting_level; p.grid_size],
            t: 0.0,
        }
    }
}

/// w(d) = A_exc exp(-d^2 / 2 sigma_exc^2) - A_inh exp(-d^2 / 2 sigma_inh^2)
pub fn mexican_hat(k: &KernelParams, d: f64) -> f64 {
    let d2 = d * d;
    k.a_exc * exp(-d2 / (2.0 * k.sigma_exc * k.sigma_exc))
        - k.a_inh * exp(-d2 / (2.0 * k.sigma_inh * k.sigma_inh))
}

/// Logistic output nonlinearity, 1 / (1 + exp(-beta * u)).
pub fn sigmoid(u: f64, beta: f64) -> f64 {
    1.0 / (1.0 + exp(-beta * u))
}

/// One explicit Euler step of the field equation.
///
/// The convolution is computed directly over kernel offsets in a fixed
/// order, so under periodic boundaries a shifted input produces an
/// exactly shifted field.
pub fn field_step(
    s: &FieldState,
    p: &FieldParams,
    k: &KernelParams,
    input: &[f64],
    dt: f64,
) -> Result<FieldState, FieldError> {
    p.check()?;
    k.check()?;
    if !(dt > 0.0) || dt > p.tau / 10.0 {
        return Err(FieldError::DtTooLarge);
    }
    let n = p.grid_size;
    if s.u.len() != n || input.len() != n {
        return Err(FieldError::InvalidParam("state/input length"));
    }
    if s.u.iter().chain(input.iter()).any(|v| !v.is_finite()) {
        return Err(FieldError::NonFinite);
    }
    // sampled kernel, one entry per cell offset
    let mut table = Vec::with_capacity(n);
    for m in 0..n {
        table.push(mexican_hat(k, m as f64 * p.dx) * p.dx);
    }
    let f: Vec<f64> = s.u.iter().map(|&u| sigmoid(u, p.sigmoid_beta)).collect();
    let mut next = Vec::with_capacity(n);
    let rate = dt / p.tau;
    for i in 0..n {
        let mut conv = table[0] * f[i];
        for m in 1..n {
            match p.boundary {
                Boundary::ZeroPadded => {
                    if i >= m {
                        conv += table[m] * f[i - m];
                    }
                    if i + m < n {
                        conv += table[m] * f[i + m];
                    }
                }
                Boundary::Periodic => {
                    conv += table[m] * f[(i + n - m) % n];
                    conv += table[m] * f[(i + m) % n];
                }
            }
        }
        let du = -s.u[i] + p.resting_level + input[i] + conv;
        let u = s.u[i] + rate * du;
        if !u.is_finite() {
            return Err(FieldError::NonFinite);
        }
        next.push(u);
    }
    Ok(FieldState {
        u: next,
        t: s.t + dt,
    })
}

/// A supra-threshold activity bump.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Peak {
    /// Activation-weighted centroid, in cell units.
    pub position: f64,
    pub value: f64,
}

/// Report contiguous supra-threshold regions, ordered by position.
/// Regions separated by at least one sub-threshold cell are distinct.
pub fn detect_peaks(u: &[f64], threshold: f64) -> Vec<Peak> {
    let mut peaks = Vec::new();
    let mut i = 0;
    while i < u.len() {
        if u[i] > threshold {
            let start = i;
            let mut mass = 0.0;
            let mut moment = 0.0;
            let mut max = f64::NEG_INFINITY;
            while i < u.len() && u[i] > threshold {
                mass += u[i];
                moment += u[i] * i as f64;
                if u[i] > max {
                    max = u[i];
                }
                i += 1;
            }
            let _ = start;
            peaks.push(Peak {
                position: moment / mass,
                value: max,
            });
        } else {
            i += 1;
        }
    }
    peaks
}

/// Winner-take-all network specification: an excitatory pool with
/// Gaussian lateral weights and a shared inhibitory pool.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WtaSpec {
    pub n_exc: usize,
    pub n_inh: usize,
    pub kernel: KernelParams,
    /// Static weight level for every excitatory -> inhibitory connection.
    pub exc_to_inh: i8,
    /// Static weight level (negative) for inhibitory -> excitatory.
    pub inh_to_exc: i8,
    /// Self-excitation level on the diagonal.
    pub self_exc: i8,
}

/// Neuron index ranges for a compiled WTA.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WtaLayout {
    pub exc_start: u16,
    pub inh_start: u16,
}

/// Round to the nearest static weight level, ties away from zero,
/// saturating at the level bounds.
pub fn quantize_level(w: f64) -> i8 {
    let r = round(w);
    if r < MIN_LEVEL as f64 {
        MIN_LEVEL
    } else if r > MAX_LEVEL as f64 {
        MAX_LEVEL
    } else {
        r as i8
    }
}

/// Compile a WTA spec into chip connectivity.
///
/// Excitatory-to-excitatory weights are sampled from the positive
/// Gaussian part of the kernel over neuron index distance; the inhibitory
/// part of the kernel is realized by the all-to-all inhibitory pool.
pub fn compile_wta(
    spec: &WtaSpec,
    layout: WtaLayout,
    conn: &mut ConnectivityMatrix,
) -> Result<(), ChipError> {
    let n = conn.n_neurons();
    let exc_end = layout.exc_start as usize + spec.n_exc;
    let inh_end = layout.inh_start as usize + spec.n_inh;
    if exc_end > n || inh_end > n {
        return Err(ChipError::BadTarget {
            neuron: exc_end.max(inh_end) as u32 - 1,
        });
    }
    for i in 0..spec.n_exc {
        let pre = layout.exc_start + i as u16;
        for j in 0..spec.n_exc {
            let post = layout.exc_start + j as u16;
            let level = if i == j {
                spec.self_exc
            } else {
                let d = fabs(i as f64 - j as f64);
                let w = spec.kernel.a_exc
                    * exp(-d * d / (2.0 * spec.kernel.sigma_exc * spec.kernel.sigma_exc));
                quantize_level(w)
            };
            if level != 0 {
                conn.connect_static(pre, post, level)?;
            }
        }
        for j in 0..spec.n_inh {
            conn.connect_static(pre, layout.inh_start + j as u16, spec.exc_to_inh)?;
        }
    }
    for i in 0..spec.n_inh {
        let pre = layout.inh_start + i as u16;
        for j in 0..spec.n_exc {
            conn.connect_static(pre, layout.exc_start + j as u16, spec.inh_to_exc)?;
        }
    }
    Ok(())
}

/// Field and kernel parameters that hold a self-sustained bump after the
/// input is removed (pinned by the reference simulation in the tests).
pub fn preset_selfsustain() -> (FieldParams, KernelParams) {
    (
        FieldParams {
            tau: 0.05,
            resting_level: -2.0,
            grid_size: 64,
            dx: 1.0,
            boundary: Boundary::ZeroPadded,
            sigmoid_beta: 4.0,
        },
        KernelParams {
            a_exc: 2.0,
            a_inh: 0.5,
            sigma_exc: 2.5,
            sigma_inh: 24.0,
        },
    )
}

/// Like [`preset_selfsustain`] but with excitation too weak to hold a
/// bump: activity decays back to rest within a few tau.
pub fn preset_decay() -> (FieldParams, KernelParams) {
    let (p, k) = preset_selfsustain();
    (
        p,
        KernelParams {
            a_exc: 0.5,
            ..k
        },
    )
}

/// Gaussian input profile centered at `center` (cell units).
pub fn gaussian_input(n: usize, center: f64, sigma: f64, amplitude: f64) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let d = i as f64 - center;
            amplitude * exp(-d * d / (2.0 * sigma * sigma))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mexican_hat_examples() {
        let k = KernelParams {
            a_exc: 2.0,
            a_inh: 1.0,
            sigma_exc: 1.0,
            sigma_inh: 2.0,
        };
        // d = 0: A_exc - A_inh
        assert_eq!(mexican_hat(&k, 0.0), 1.0);
        // d = 2: 2 e^-2 - e^-0.5 (high-precision evaluation)
        let w = mexican_hat(&k, 2.0);
        assert!((w - (-0.335_860_093_1)).abs() < 1e-9, "w {w}");
        // Gaussian tails
        assert!(fabs(mexican_hat(&k, 8.0 * k.sigma_inh + 1.0)) < 1e-8);
        // depends only on |d|
        assert_eq!(mexican_hat(&k, 1.3), mexican_hat(&k, fabs(-1.3)));
    }

    #[test]
    fn sigmoid_examples() {
        assert_eq!(sigmoid(0.0, 4.0), 0.5);
        assert!((sigmoid(1.0, 4.0) - 0.982_013_790).abs() < 1e-9);
        assert!(sigmoid(1e6, 4.0) == 1.0);
        assert!(sigmoid(-1e6, 4.0) == 0.0);
    }

    fn zero_kernel() -> KernelParams {
        KernelParams {
            a_exc: 0.0,
            a_inh: 0.0,
            sigma_exc: 1.0,
            sigma_inh: 2.0,
        }
    }

    #[test]
    fn euler_matches_linear_decay() {
        // zero kernel, zero input: u -> h as h + (u0 - h) e^{-t/tau}
        let p = FieldParams {
            tau: 0.1,
            resting_level: -1.0,
            grid_size: 8,
            dx: 1.0,
            boundary: Boundary::ZeroPadded,
            sigmoid_beta: 4.0,
        };
        let k = zero_kernel();
        let u0 = 3.0;
        let mut s = FieldState {
            u: vec![u0; 8],
            t: 0.0,
        };
        let dt = p.tau / 100.0;
        let input = vec![0.0; 8];
        for _ in 0..500 {
            s = field_step(&s, &p, &k, &input, dt).unwrap();
        }
        let analytic = p.resting_level + (u0 - p.resting_level) * exp(-5.0);
        for &u in &s.u {
            assert!(
                (u - analytic).abs() / (u0 - p.resting_level) < 0.01,
                "u {u} analytic {analytic}"
            );
        }
    }

    #[test]
    fn decay_to_rest_is_monotone() {
        let p = FieldParams {
            tau: 0.05,
            resting_level: -2.0,
            grid_size: 16,
            dx: 1.0,
            boundary: Boundary::ZeroPadded,
            sigmoid_beta: 4.0,
        };
        let k = zero_kernel();
        let mut s = FieldState {
            u: (0..16).map(|i| i as f64 * 0.3 - 2.0).collect(),
            t: 0.0,
        };
        let input = vec![0.0; 16];
        let mut prev = f64::INFINITY;
        for _ in 0..200 {
            s = field_step(&s, &p, &k, &input, p.tau / 20.0).unwrap();
            let dist = s
                .u
                .iter()
                .map(|&u| fabs(u - p.resting_level))
                .fold(0.0, f64::max);
            assert!(dist <= prev + 1e-15);
            prev = dist;
        }
    }

    #[test]
    fn stability_guard_rejects_large_dt() {
        let (p, k) = preset_selfsustain();
        let s = FieldState::at_rest(&p);
        let input = vec![0.0; p.grid_size];
        assert_eq!(
            field_step(&s, &p, &k, &input, p.tau / 2.0),
            Err(FieldError::DtTooLarge)
        );
    }

    #[test]
    fn nan_input_is_a_hard_fault() {
        let (p, k) = preset_selfsustain();
        let s = FieldState::at_rest(&p);
        let mut input = vec![0.0; p.grid_size];
        input[3] = f64::NAN;
        assert_eq!(
            field_step(&s, &p, &k, &input, p.tau / 20.0),
            Err(FieldError::NonFinite)
        );
    }

    #[test]
    fn translation_equivariance_periodic() {
        let (mut p, k) = preset_selfsustain();
        p.boundary = Boundary::Periodic;
        let n = p.grid_size;
        let shift = 11usize;
        let input = gaussian_input(n, 20.0, 3.0, 4.0);
        let shifted: Vec<f64> = (0..n).map(|i| input[(i + n - shift) % n]).collect();
        let mut a = FieldState::at_rest(&p);
        let mut b = FieldState::at_rest(&p);
        let dt = p.tau / 20.0;
        for _ in 0..100 {
            a = field_step(&a, &p, &k, &input, dt).unwrap();
            b = field_step(&b, &p, &k, &shifted, dt).unwrap();
        }
        for i in 0..n {
            assert_eq!(a.u[i], b.u[(i + shift) % n], "cell {i}");
        }
    }

    #[test]
    fn peak_detection() {
        let mut u = vec![-1.0; 64];
        assert!(detect_peaks(&u, 0.0).is_empty());
        // symmetric bump at 32
        for (i, v) in u.iter_mut().enumerate() {
            let d = i as f64 - 32.0;
            *v = 3.0 * exp(-d * d / 8.0) - 1.0;
        }
        let peaks = detect_peaks(&u, 0.0);
        assert_eq!(peaks.len(), 1);
        assert!((peaks[0].position - 32.0).abs() < 1e-9);
        // two separated bumps, ordered by position
        let mut u2 = vec![-1.0; 64];
        for (i, v) in u2.iter_mut().enumerate() {
            let d1 = i as f64 - 10.0;
            let d2 = i as f64 - 40.0;
            *v = 2.0 * exp(-d1 * d1 / 4.0) + 2.0 * exp(-d2 * d2 / 4.0) - 1.0;
        }
        let peaks = detect_peaks(&u2, 0.0);
        assert_eq!(peaks.len(), 2);
        assert!(peaks[0].position < peaks[1].position);
        assert!((peaks[0].position - 10.0).abs() < 0.5);
        assert!((peaks[1].position - 40.0).abs() < 0.5);
    }

    #[test]
    fn selfsustain_preset_holds_bump_100_tau() {
        let (p, k) = preset_selfsustain();
        let n = p.grid_size;
        let dt = p.tau / 20.0;
        let input = gaussian_input(n, 32.0, 2.5, 4.0);
        let zero = vec![0.0; n];
        let mut s = FieldState::at_rest(&p);
        let steps_2tau = 40;
        for _ in 0..steps_2tau {
            s = field_step(&s, &p, &k, &input, dt).unwrap();
        }
        assert_eq!(detect_peaks(&s.u, 0.0).len(), 1);
        for step in 0..(100 * 20) {
            s = field_step(&s, &p, &k, &zero, dt).unwrap();
            if step % 100 == 0 {
                assert_eq!(detect_peaks(&s.u, 0.0).len(), 1, "lost bump at step {step}");
            }
        }
        let peaks = detect_peaks(&s.u, 0.0);
        assert_eq!(peaks.len(), 1);
        assert!((peaks[0].position - 32.0).abs() < 3.0);
    }

    #[test]
    fn decay_preset_loses_bump_within_5_tau() {
        let (p, k) = preset_decay();
        let n = p.grid_size;
        let dt = p.tau / 20.0;
        let input = gaussian_input(n, 32.0, 2.5, 4.0);
        let zero = vec![0.0; n];
        let mut s = FieldState::at_rest(&p);
        for _ in 0..40 {
            s = field_step(&s, &p, &k, &input, dt).unwrap();
        }
        // input drives a peak while present
        assert!(!detect_peaks(&s.u, 0.0).is_empty());
        for _ in 0..(5 * 20) {
            s = field_step(&s, &p, &k, &zero, dt).unwrap();
        }
        // decayed to within 1% of h
        let h = p.resting_level;
        for &u in &s.u {
            assert!((u - h).abs() <= 0.01 * fabs(h), "u {u}");
        }
    }

    #[test]
    fn selection_picks_stronger_input() {
        let (p, k) = preset_selfsustain();
        let n = p.grid_size;
        let dt = p.tau / 20.0;
        let strong = gaussian_input(n, 16.0, 2.5, 3.0);
        let weak = gaussian_input(n, 48.0, 2.5, 2.0);
        let input: Vec<f64> = strong.iter().zip(&weak).map(|(a, b)| a + b).collect();
        let mut s = FieldState::at_rest(&p);
        for _ in 0..(20 * 20) {
            s = field_step(&s, &p, &k, &input, dt).unwrap();
        }
        let peaks = detect_peaks(&s.u, 0.0);
        assert_eq!(peaks.len(), 1, "peaks {peaks:?}");
        assert!((peaks[0].position - 16.0).abs() < 3.0);
    }

    #[test]
    fn quantization_ties_away_from_zero() {
        assert_eq!(quantize_level(0.5), 1);
        assert_eq!(quantize_level(-0.5), -1);
        assert_eq!(quantize_level(0.49), 0);
        assert_eq!(quantize_level(2.5), 3);
        assert_eq!(quantize_level(7.0), 3);
        assert_eq!(quantize_level(-7.0), -3);
    }

    #[test]
    fn compile_wta_entry_counts() {
        let spec = WtaSpec {
            n_exc: 16,
            n_inh: 4,
            kernel: KernelParams {
                a_exc: 0.0,
                a_inh: 1.0,
                sigma_exc: 2.0,
                sigma_inh: 6.0,
            },
            exc_to_inh: 2,
            inh_to_exc: -2,
            self_exc: 0,
        };
        let mut conn = ConnectivityMatrix::new(20, 64, 0, 4);
        compile_wta(
            &spec,
            WtaLayout {
                exc_start: 0,
                inh_start: 16,
            },
            &mut conn,
        )
        .unwrap();
        let mut exc_to_inh = 0;
        let mut inh_to_exc = 0;
        let mut exc_to_exc = 0;
        for (pre, t) in conn.recurrent_routes() {
            let pre_is_exc = pre < 16;
            let post_is_exc = t.neuron < 16;
            match (pre_is_exc, post_is_exc) {
                (true, false) => exc_to_inh += 1,
                (false, true) => inh_to_exc += 1,
                (true, true) => exc_to_exc += 1,
                _ => {}
            }
        }
        // A_exc = 0: no exc->exc entries
        assert_eq!(exc_to_exc, 0);
        assert_eq!(exc_to_inh, 16 * 4);
        assert_eq!(inh_to_exc, 4 * 16);
    }

    #[test]
    fn compile_wta_symmetric_under_reflection() {
        let spec = WtaSpec {
            n_exc: 12,
            n_inh: 3,
            kernel: KernelParams {
                a_exc: 3.0,
                a_inh: 1.0,
                sigma_exc: 2.0,
                sigma_inh: 6.0,
            },
            exc_to_inh: 1,
            inh_to_exc: -2,
            self_exc: 2,
        };
        let mut conn = ConnectivityMatrix::new(15, 64, 0, 4);
        compile_wta(
            &spec,
            WtaLayout {
                exc_start: 0,
                inh_start: 12,
            },
            &mut conn,
        )
        .unwrap();
        // weight(i -> j) must equal weight(n-1-i -> n-1-j)
        let mut w = [[0i8; 12]; 12];
        for (pre, t) in conn.recurrent_routes() {
            if pre < 12 && t.neuron < 12 {
                if let crate::chip::Column::Static(c) = t.column {
                    w[pre as usize][t.neuron as usize] = conn.static_level(t.neuron, c);
                }
            }
        }
        for i in 0..12 {
            for j in 0..12 {
                assert_eq!(w[i][j], w[11 - i][11 - j]);
                assert_eq!(w[i][j], w[j][i]);
            }
        }
    }

    #[test]
    fn compile_wta_capacity_error() {
        let spec = WtaSpec {
            n_exc: 16,
            n_inh: 4,
            kernel: zero_kernel(),
            exc_to_inh: 2,
            inh_to_exc: -2,
            self_exc: 0,
        };
        let mut conn = ConnectivityMatrix::new(10, 64, 0, 4);
        let err = compile_wta(
            &spec,
            WtaLayout {
                exc_start: 0,
                inh_start: 16,
            },
            &mut conn,
        )
        .unwrap_err();
        assert!(matches!(err, ChipError::BadTarget { .. }));
    }
}
