//! Seeded random streams.
//!
//! Every run or replica owns a [`ChaCha8Rng`] seeded from a 64-bit value. Replica `r` of an
//! ensemble with base seed `s` uses stream seed `splitmix64(s ^ r)`, so the samples of an
//! ensemble do not depend on how replicas are scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// One round of the SplitMix64 output function.
#[inline]
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn stream_seed(base_seed: u64, replica: u64) -> u64 {
    splitmix64(base_seed ^ replica)
}

pub fn replica_rng(base_seed: u64, replica: u64) -> SimRng {
    SimRng::seed_from_u64(stream_seed(base_seed, replica))
}

pub fn seeded_rng(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

/// Map `f` over replica indices `0..n`, giving each call its own stream.
/// The output order is the replica order regardless of the execution schedule.
pub fn map_replicas<T, F>(base_seed: u64, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, &mut SimRng) -> T + Sync + Send,
{
    map_replica_range(base_seed, 0, n as u64, f)
}

/// [`map_replicas`] over replica indices `start..end`.
pub fn map_replica_range<T, F>(base_seed: u64, start: u64, end: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, &mut SimRng) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (start..end)
            .into_par_iter()
            .map(|r| f(r, &mut replica_rng(base_seed, r)))
            .collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (start..end)
            .map(|r| f(r, &mut replica_rng(base_seed, r)))
            .collect()
    }
}
