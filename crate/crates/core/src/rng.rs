//! Deterministic RNG for mismatch sampling and event generation.
//!
//! Uses xorshift64* with a splitmix64 seed scrambler. Output is stable
//! across platforms, which keeps seeded trials byte-reproducible. Not
//! cryptographically secure.

/// Deterministic RNG with a single 64-bit state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimRng {
    state: u64,
}

impl SimRng {
    /// Create a new RNG. The seed is scrambled through splitmix64 so that
    /// small consecutive seeds still give uncorrelated streams; a zero
    /// state is remapped to avoid the xorshift lockup state.
    pub fn new(seed: u64) -> Self {
        let mut z = seed.wrapping_add(0x9E3779B97F4A7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
        z ^= z >> 31;
        Self {
            state: if z == 0 { 0x9E3779B97F4A7C15 } else { z },
        }
    }

    /// Derive an independent stream, e.g. one per neuron or per trial.
    pub fn fork(&self, stream: u64) -> Self {
        Self::new(self.state ^ stream.wrapping_mul(0xD1342543DE82EF95))
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.state;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        self.state = x;
        x.wrapping_mul(0x2545F4914F6CDD1D)
    }

    /// Uniform double in `[0, 1)`.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform double in `[lo, hi)`.
    #[inline]
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Uniform integer in `[0, n)`.
    #[inline]
    pub fn next_below(&mut self, n: u64) -> u64 {
        debug_assert!(n > 0);
        self.next_u64() % n
    }

    /// Standard normal via Box-Muller.
    pub fn normal(&mut self) -> f64 {
        let u1 = loop {
            let u = self.next_f64();
            if u > 0.0 {
                break u;
            }
        };
        let u2 = self.next_f64();
        libm::sqrt(-2.0 * libm::log(u1)) * libm::cos(2.0 * core::f64::consts::PI * u2)
    }

    /// Lognormal factor with unit mean and the given coefficient of
    /// variation. `cv = 0` returns exactly 1.
    pub fn lognormal_factor(&mut self, cv: f64) -> f64 {
        if cv == 0.0 {
            return 1.0;
        }
        let sigma2 = libm::log(1.0 + cv * cv);
        let mu = -0.5 * sigma2;
        libm::exp(mu + libm::sqrt(sigma2) * self.normal())
    }

    /// Poisson sample by inversion of the exponential waiting times
    /// (Knuth). Adequate for the small per-step rates used here.
    pub fn poisson(&mut self, lambda: f64) -> u32 {
        if lambda <= 0.0 {
            return 0;
        }
        let limit = libm::exp(-lambda);
        let mut k = 0u32;
        let mut p = 1.0;
        loop {
            p *= self.next_f64();
            if p <= limit {
                return k;
            }
            k += 1;
            if k > 10_000 {
                // rate far outside the intended regime
                return k;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_stream() {
        let mut a = SimRng::new(42);
        let mut b = SimRng::new(42);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn lognormal_zero_cv_is_one() {
        let mut rng = SimRng::new(1);
        for _ in 0..10 {
            assert_eq!(rng.lognormal_factor(0.0), 1.0);
        }
    }

    #[test]
    fn lognormal_mean_near_one() {
        let mut rng = SimRng::new(7);
        let n = 20_000;
        let mean: f64 = (0..n).map(|_| rng.lognormal_factor(0.1)).sum::<f64>() / n as f64;
        assert!((mean - 1.0).abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn poisson_mean() {
        let mut rng = SimRng::new(9);
        let n = 20_000;
        let mean: f64 = (0..n).map(|_| rng.poisson(3.0) as f64).sum::<f64>() / n as f64;
        assert!((mean - 3.0).abs() < 0.1, "mean {mean}");
    }
}
