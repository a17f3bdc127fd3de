//! Seeded AER input stream generators.

use neuroloop_core::chip::{AerEvent, Micros};
use neuroloop_core::rng::SimRng;

/// Poisson event stream at `rate_hz` whose addresses follow a Gaussian
/// profile around `center` (clamped to the address range).
pub fn gaussian_stream(
    rng: &mut SimRng,
    n_addrs: usize,
    center: f64,
    sigma: f64,
    rate_hz: f64,
    t0: Micros,
    t1: Micros,
) -> Vec<AerEvent> {
    let mut events = Vec::new();
    if rate_hz <= 0.0 {
        return events;
    }
    let mut t = t0 as f64;
    loop {
        // exponential interarrival
        let u = loop {
            let u = rng.next_f64();
            if u > 0.0 {
                break u;
            }
        };
        t += -u.ln() / rate_hz * 1e6;
        if t >= t1 as f64 {
            return events;
        }
        let addr = (center + sigma * rng.normal()).round();
        let addr = addr.clamp(0.0, (n_addrs - 1) as f64) as u32;
        events.push(AerEvent::input(t as Micros, addr));
    }
}

/// Poisson event stream with addresses uniform over the range.
pub fn uniform_stream(
    rng: &mut SimRng,
    n_addrs: usize,
    rate_hz: f64,
    t0: Micros,
    t1: Micros,
) -> Vec<AerEvent> {
    let mut events = Vec::new();
    if rate_hz <= 0.0 {
        return events;
    }
    let mut t = t0 as f64;
    loop {
        let u = loop {
            let u = rng.next_f64();
            if u > 0.0 {
                break u;
            }
        };
        t += -u.ln() / rate_hz * 1e6;
        if t >= t1 as f64 {
            return events;
        }
        events.push(AerEvent::input(t as Micros, rng.next_below(n_addrs as u64) as u32));
    }
}

/// Merge timestamp-sorted streams into one sorted stream.
pub fn merge_sorted(mut streams: Vec<Vec<AerEvent>>) -> Vec<AerEvent> {
    let mut all: Vec<AerEvent> = streams.drain(..).flatten().collect();
    all.sort_by_key(|e| e.timestamp);
    all
}

/// Mean and standard deviation of a sequence of positions.
pub fn mean_std(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let v: Vec<f64> = values.collect();
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / v.len() as f64;
    (mean, var.sqrt())
}
