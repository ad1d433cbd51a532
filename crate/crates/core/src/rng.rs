//! Fixed pseudo-random generator used everywhere randomness is needed.
//!
//! Xoshiro256++ seeded through SplitMix64 (`seed_from_u64`), so a seed fully
//! determines every synthetic dataset, initialization, and shuffle across
//! runs and platforms.

use rand::{Rng as _, SeedableRng};
use rand_distr::{Distribution, Normal};
use rand_xoshiro::Xoshiro256PlusPlus;

pub struct Rng(Xoshiro256PlusPlus);

impl Rng {
    pub fn seed_from_u64(seed: u64) -> Self {
        Self(Xoshiro256PlusPlus::seed_from_u64(seed))
    }

    /// Uniform draw from `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.0.gen_range(lo..hi)
    }

    pub fn normal(&mut self, mean: f64, std: f64) -> f64 {
        Normal::new(mean, std).expect("std must be finite").sample(&mut self.0)
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.0.gen_bool(p)
    }

    pub fn usize_below(&mut self, n: usize) -> usize {
        self.0.gen_range(0..n)
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.0.gen_range(0..=i);
            items.swap(i, j);
        }
    }
}
