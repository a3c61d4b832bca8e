//! Chunked, reproducible Monte Carlo driver.
//!
//! Every sample owns its own ChaCha stream derived from (root seed, sample
//! index), so estimates are bit-reproducible for a given seed regardless of
//! chunk scheduling or worker count, and runs with different horizons or
//! thresholds are exactly coupled sample-by-sample.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::Z99;

/// Default number of samples per work chunk.
pub const DEFAULT_CHUNK_SIZE: u64 = 1 << 16;

#[derive(Debug, Clone, Copy)]
pub struct McConfig {
    pub samples: u64,
    pub chunk_size: u64,
    pub root_seed: u64,
}

impl McConfig {
    pub fn new(samples: u64, root_seed: u64) -> Self {
        Self {
            samples,
            chunk_size: DEFAULT_CHUNK_SIZE,
            root_seed,
        }
    }
}

/// RNG for one sample: the root seed keys the cipher, the sample index
/// selects the stream.
pub fn sample_rng(base: &ChaCha8Rng, sample_index: u64) -> ChaCha8Rng {
    let mut rng = base.clone();
    rng.set_stream(sample_index);
    rng
}

/// Base RNG for a root seed; combine with [`sample_rng`] per sample.
pub fn base_rng(root_seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(root_seed)
}

/// Count, per event slot, how many samples satisfy the event.
///
/// The per-sample closure receives a fresh stream and fills `K` booleans.
/// Merging sums unsigned counts, so the result does not depend on chunk
/// scheduling.
pub fn mc_counts<const K: usize, F>(cfg: &McConfig, per_sample: F) -> [u64; K]
where
    F: Fn(&mut ChaCha8Rng, &mut [bool; K]) + Sync,
{
    let base = base_rng(cfg.root_seed);
    let n_chunks = cfg.samples.div_ceil(cfg.chunk_size);
    let partials: Vec<[u64; K]> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * cfg.chunk_size;
            let hi = (lo + cfg.chunk_size).min(cfg.samples);
            let mut counts = [0u64; K];
            for i in lo..hi {
                let mut rng = sample_rng(&base, i);
                let mut flags = [false; K];
                per_sample(&mut rng, &mut flags);
                for k in 0..K {
                    if flags[k] {
                        counts[k] += 1;
                    }
                }
            }
            counts
        })
        .collect();
    let mut totals = [0u64; K];
    for p in partials {
        for k in 0..K {
            totals[k] += p[k];
        }
    }
    totals
}

/// Accumulate `K` real-valued sums over all samples.
///
/// Per-chunk partial sums are folded in chunk order, so the floating-point
/// result is identical for a fixed (seed, chunk size) whatever the thread
/// schedule.
pub fn mc_sums<const K: usize, F>(cfg: &McConfig, per_sample: F) -> [f64; K]
where
    F: Fn(&mut ChaCha8Rng, &mut [f64; K]) + Sync,
{
    let base = base_rng(cfg.root_seed);
    let n_chunks = cfg.samples.div_ceil(cfg.chunk_size);
    let partials: Vec<[f64; K]> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * cfg.chunk_size;
            let hi = (lo + cfg.chunk_size).min(cfg.samples);
            let mut sums = [0.0f64; K];
            for i in lo..hi {
                let mut rng = sample_rng(&base, i);
                let mut contrib = [0.0f64; K];
                per_sample(&mut rng, &mut contrib);
                for k in 0..K {
                    sums[k] += contrib[k];
                }
            }
            sums
        })
        .collect();
    let mut totals = [0.0f64; K];
    for p in partials {
        for k in 0..K {
            totals[k] += p[k];
        }
    }
    totals
}

/// Runtime-width variant of [`mc_counts`]: the per-sample closure increments
/// any of `k` counter slots.
pub fn mc_tally<F>(cfg: &McConfig, k: usize, per_sample: F) -> Vec<u64>
where
    F: Fn(&mut ChaCha8Rng, &mut [u64]) + Sync,
{
    let base = base_rng(cfg.root_seed);
    let n_chunks = cfg.samples.div_ceil(cfg.chunk_size);
    let partials: Vec<Vec<u64>> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * cfg.chunk_size;
            let hi = (lo + cfg.chunk_size).min(cfg.samples);
            let mut counts = vec![0u64; k];
            for i in lo..hi {
                let mut rng = sample_rng(&base, i);
                per_sample(&mut rng, &mut counts);
            }
            counts
        })
        .collect();
    let mut totals = vec![0u64; k];
    for p in partials {
        for (t, v) in totals.iter_mut().zip(p) {
            *t += v;
        }
    }
    totals
}

/// A binomial proportion estimate with its standard error and 99% CI.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct BinomialEstimate {
    pub successes: u64,
    pub samples: u64,
    pub p_hat: f64,
    pub std_error: f64,
    pub ci99: (f64, f64),
}

impl BinomialEstimate {
    pub fn from_counts(successes: u64, samples: u64) -> Self {
        let n = samples as f64;
        let p = successes as f64 / n;
        let se = (p * (1.0 - p) / n).sqrt();
        Self {
            successes,
            samples,
            p_hat: p,
            std_error: se,
            ci99: (p - Z99 * se, p + Z99 * se),
        }
    }

    pub fn overlaps(&self, other: &BinomialEstimate) -> bool {
        self.ci99.0 <= other.ci99.1 && other.ci99.0 <= self.ci99.1
    }
}
