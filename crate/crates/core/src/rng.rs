//! Seed derivation and replicate batching.
//!
//! Replicate `k` of a batch with master seed `s` always draws from a ChaCha8
//! stream keyed by `mix(s, k)`, so a batch produces the same values in the
//! same order no matter how rayon schedules it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub type SimRng = ChaCha8Rng;

/// SplitMix64 finalizer.
#[inline]
pub fn avalanche(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for replicate `k` of a batch keyed by `seed`.
#[inline]
pub fn derive_seed(seed: u64, k: u64) -> u64 {
    avalanche(avalanche(seed ^ 0x9e37_79b9_7f4a_7c15).wrapping_add(avalanche(k.wrapping_add(0x632b_e59b_d9b4_e019))))
}

pub fn rng_from_seed(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Runs `f(k, rng_k)` for `k in 0..reps` and returns the results in
/// replicate order.
pub fn replicate<T, F>(reps: usize, seed: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, &mut SimRng) -> T + Sync,
{
    (0..reps)
        .into_par_iter()
        .map(|k| {
            let mut rng = rng_from_seed(derive_seed(seed, k as u64));
            f(k, &mut rng)
        })
        .collect()
}

/// Like [`replicate`], but hands each replicate its derived seed instead of
/// a ready-made generator (for routines that key several streams off one
/// seed).
pub fn replicate_seeded<T, F>(reps: usize, seed: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, u64) -> T + Sync,
{
    (0..reps)
        .into_par_iter()
        .map(|k| f(k, derive_seed(seed, k as u64)))
        .collect()
}

/// A Monte-Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Estimate { value, stderr: 0.0 }
    }

    /// Frequency estimate of a Bernoulli mean from `hits` out of `reps`.
    pub fn from_hits(hits: usize, reps: usize) -> Self {
        let p = hits as f64 / reps as f64;
        Estimate {
            value: p,
            stderr: (p * (1.0 - p) / reps as f64).sqrt(),
        }
    }

    /// Sample mean and standard error of the mean.
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        if xs.len() < 2 {
            return Estimate { value: mean, stderr: f64::INFINITY };
        }
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        Estimate { value: mean, stderr: (var / n).sqrt() }
    }

    /// True when `target` lies within `k` standard errors.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.value - target).abs() <= k * self.stderr
    }
}
