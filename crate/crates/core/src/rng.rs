//! Counter-based random streams: every (seed, block, chunk) triple owns an
//! independent ChaCha stream, so results do not depend on how chunks are
//! scheduled across threads.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Samples per chunk in every parallel Monte Carlo loop.
pub const CHUNK: usize = 65_536;

/// SplitMix64 finalizer, used to derive block keys from the user seed.
pub fn mix(seed: u64, block: u64) -> u64 {
    let mut z = seed ^ block.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn stream(seed: u64, block: u64, chunk: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(mix(seed, block));
    rng.set_stream(chunk);
    rng
}

/// Uniform on the open interval (0, 1) with 53 random bits.
pub fn open01(rng: &mut impl RngCore) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Runs `f(rng, range)` over fixed-size chunks of `0..n` in parallel and
/// returns the per-chunk results in chunk order.
pub fn par_chunks<T: Send>(
    n: usize,
    seed: u64,
    block: u64,
    f: impl Fn(&mut ChaCha8Rng, std::ops::Range<usize>) -> T + Sync,
) -> Vec<T> {
    let chunks = n.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream(seed, block, c as u64);
            let lo = c * CHUNK;
            f(&mut rng, lo..(lo + CHUNK).min(n))
        })
        .collect()
}
