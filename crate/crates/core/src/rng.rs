//! Seeded random number generation.
//!
//! Every stochastic routine in this crate takes an explicit `u64` seed and
//! owns its sampler algorithms, so repeated runs are byte-identical and
//! independent tasks can derive disjoint child seeds from a master seed.

#[allow(unused_imports)] // f64 methods come from the trait in no_std builds
use num_traits::Float;
use rand_chacha::ChaCha12Rng;
use rand_core::{RngCore, SeedableRng};

use alloc::vec::Vec;

/// Splitmix64 finalizer; good avalanche, used for seed derivation.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a child seed from a master seed and a list of tags
/// (e.g. `[n, replicate]`). Order-sensitive and collision-resistant at the
/// scale of these studies.
pub fn derive_seed(master: u64, tags: &[u64]) -> u64 {
    let mut state = mix(master ^ 0x6c62_272e_07bb_0142);
    for &t in tags {
        state = mix(state ^ mix(t));
    }
    state
}

/// Deterministic generator wrapping ChaCha12 with the distribution samplers
/// this crate needs.
#[derive(Clone, Debug)]
pub struct Prng {
    inner: ChaCha12Rng,
}

impl Prng {
    pub fn seed_from(seed: u64) -> Self {
        Prng {
            inner: ChaCha12Rng::seed_from_u64(seed),
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform on [0, 1) with 53-bit resolution.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / 9_007_199_254_740_992.0)
    }

    /// Uniform on (0, 1]; safe to pass through `ln`.
    pub fn uniform_open(&mut self) -> f64 {
        ((self.next_u64() >> 11) + 1) as f64 * (1.0 / 9_007_199_254_740_992.0)
    }

    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn below(&mut self, n: usize) -> usize {
        // Multiply-shift; bias is negligible for the small n used here.
        ((self.uniform() * n as f64) as usize).min(n - 1)
    }

    /// Standard normal via Box-Muller (two uniforms per draw, fixed
    /// consumption pattern).
    pub fn normal(&mut self) -> f64 {
        let u1 = self.uniform_open();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * libm::cos(2.0 * core::f64::consts::PI * u2)
    }

    pub fn normal_scaled(&mut self, mean: f64, sd: f64) -> f64 {
        mean + sd * self.normal()
    }

    /// Standard Cauchy via inverse CDF.
    pub fn cauchy(&mut self) -> f64 {
        libm::tan(core::f64::consts::PI * (self.uniform() - 0.5))
    }

    /// Gamma(shape, 1) by Marsaglia-Tsang, with the usual boost for shape < 1.
    pub fn gamma(&mut self, shape: f64) -> f64 {
        assert!(shape > 0.0, "gamma shape must be positive");
        if shape < 1.0 {
            let g = self.gamma(shape + 1.0);
            let u = self.uniform_open();
            return g * u.powf(1.0 / shape);
        }
        let d = shape - 1.0 / 3.0;
        let c = 1.0 / (9.0 * d).sqrt();
        loop {
            let x = self.normal();
            let v = 1.0 + c * x;
            if v <= 0.0 {
                continue;
            }
            let v = v * v * v;
            let u = self.uniform_open();
            if u.ln() < 0.5 * x * x + d - d * v + d * v.ln() {
                return d * v;
            }
        }
    }

    /// Dirichlet draw via normalized gammas.
    pub fn dirichlet(&mut self, alphas: &[f64]) -> Vec<f64> {
        let mut out: Vec<f64> = alphas.iter().map(|&a| self.gamma(a)).collect();
        let total: f64 = out.iter().sum();
        for w in &mut out {
            *w /= total;
        }
        out
    }

    /// Sample an index proportionally to `exp(log_weights)`.
    pub fn index_from_log_weights(&mut self, log_weights: &[f64]) -> usize {
        let norm = crate::special::log_sum_exp(log_weights);
        let u = self.uniform();
        let mut cum = 0.0;
        for (i, &lw) in log_weights.iter().enumerate() {
            cum += (lw - norm).exp();
            if u < cum {
                return i;
            }
        }
        log_weights.len() - 1
    }

    /// Uniformly random subset of {0, .., n-1} of the given size, returned sorted.
    pub fn subset(&mut self, n: usize, size: usize) -> Vec<usize> {
        debug_assert!(size <= n);
        // Floyd's algorithm.
        let mut chosen: Vec<usize> = Vec::with_capacity(size);
        for j in (n - size)..n {
            let t = self.below(j + 1);
            if chosen.contains(&t) {
                chosen.push(j);
            } else {
                chosen.push(t);
            }
        }
        chosen.sort_unstable();
        chosen
    }
}
