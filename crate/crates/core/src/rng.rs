//! Deterministic random streams.
//!
//! Every random artifact draws from its own ChaCha8 stream whose seed is
//! derived from a master seed and a [`Stream`] tag with SplitMix64 mixing.
//! ChaCha8 is counter based and specified at the byte level, so the same
//! seed yields the same draws on every platform (including wasm32).
//!
//! Integer draws go through `u64` ranges rather than `usize` so that
//! 32-bit targets consume the stream identically.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Component that owns a random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stream {
    Transitions,
    Rewards,
    Features,
    TargetPolicy,
    Trajectory,
    Instance,
}

impl Stream {
    fn code(self) -> u64 {
        match self {
            Stream::Transitions => 0x7472_616e_7369_7431,
            Stream::Rewards => 0x7265_7761_7264_7332,
            Stream::Features => 0x6665_6174_7572_6533,
            Stream::TargetPolicy => 0x706f_6c69_6379_7434,
            Stream::Trajectory => 0x7472_616a_6563_7435,
            Stream::Instance => 0x696e_7374_616e_6336,
        }
    }
}

/// SplitMix64 finalizer.
pub fn mix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Sub-seed for `stream` number `index` under `master`.
pub fn derive_seed(master: u64, stream: Stream, index: u64) -> u64 {
    mix64(mix64(master ^ stream.code()) ^ index)
}

pub fn stream_rng(master: u64, stream: Stream, index: u64) -> StreamRng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, stream, index))
}

pub fn rng_from_seed(seed: u64) -> StreamRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform draw in `[0, 1)`.
pub fn unit(rng: &mut StreamRng) -> f64 {
    rng.random::<f64>()
}

/// Uniform index in `lo..hi`.
pub fn index_in(rng: &mut StreamRng, lo: usize, hi: usize) -> usize {
    rng.random_range(lo as u64..hi as u64) as usize
}

/// Inverse-CDF draw from a discrete distribution.
pub fn categorical(rng: &mut StreamRng, probs: &[f64]) -> usize {
    let u = unit(rng);
    let mut acc = 0.0;
    let mut last = 0;
    for (k, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last = k;
            if u < acc {
                return k;
            }
        }
    }
    // rounding left `acc` a hair below 1
    last
}

/// Lengths of the `k` intervals cut from `[0, 1]` by `k - 1` uniform points.
pub fn simplex_cuts(rng: &mut StreamRng, k: usize) -> Vec<f64> {
    let mut cuts: Vec<f64> = (0..k.saturating_sub(1)).map(|_| unit(rng)).collect();
    cuts.sort_by(|a, b| a.total_cmp(b));
    let mut out = Vec::with_capacity(k);
    let mut prev = 0.0;
    for c in cuts {
        out.push(c - prev);
        prev = c;
    }
    out.push(1.0 - prev);
    out
}
