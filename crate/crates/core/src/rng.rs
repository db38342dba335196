//! The portable seeded generator behind every random draw in the crate.
//!
//! All randomness comes from ChaCha8 seeded through `SeedableRng::seed_from_u64`
//! (a PCG32 expansion of the 64-bit seed into the 256-bit ChaCha key). Integer
//! draws use only `next_u64`, so reproducibility does not depend on the
//! distribution code of any particular `rand` release. The generator identity
//! is written into transform files as [`GENERATOR_ID`].

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type SeededRng = ChaCha8Rng;

/// Identifier stored in serialized transforms: ChaCha8 via `seed_from_u64`.
pub const GENERATOR_ID: u8 = 1;

pub fn rng_from_seed(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for the `index`-th independent sub-stream of `seed`.
///
/// Monte-Carlo trials draw from `derive_seed(seed, trial)` so results do not
/// depend on how trials are scheduled across threads.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    mix64(seed ^ mix64(index.wrapping_add(0xD1B5_4A32_D192_ED03)))
}

/// Uniform integer in `[0, bound)` by Lemire's multiply-and-reject method.
pub fn uniform_index<R: RngCore + ?Sized>(rng: &mut R, bound: usize) -> usize {
    assert!(bound > 0, "empty range");
    let bound = bound as u64;
    let threshold = bound.wrapping_neg() % bound;
    loop {
        let m = (rng.next_u64() as u128) * (bound as u128);
        if (m as u64) >= threshold {
            return (m >> 64) as usize;
        }
    }
}

/// `count` uniform signs, 64 per generator word, least significant bit first.
/// A set bit maps to `-1.0`.
pub fn uniform_signs<R: RngCore + ?Sized>(rng: &mut R, count: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let word = rng.next_u64();
        let take = (count - out.len()).min(64);
        out.extend((0..take).map(|b| if (word >> b) & 1 == 1 { -1.0 } else { 1.0 }));
    }
    out
}

/// Uniformly random `size`-subset of `[0, n)`, returned sorted.
pub fn uniform_subset<R: RngCore + ?Sized>(rng: &mut R, n: usize, size: usize) -> Vec<usize> {
    assert!(size <= n);
    // partial Fisher-Yates on a sparse permutation
    let mut swapped = std::collections::HashMap::new();
    let mut out = Vec::with_capacity(size);
    for i in 0..size {
        let j = i + uniform_index(rng, n - i);
        let vj = *swapped.get(&j).unwrap_or(&j);
        let vi = *swapped.get(&i).unwrap_or(&i);
        swapped.insert(j, vi);
        out.push(vj);
    }
    out.sort_unstable();
    out
}
