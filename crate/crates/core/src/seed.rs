//! Counter-based seed substreams.
//!
//! A master seed expands into named, indexed substreams:
//!
//! ```text
//! derive(master, name, index) = mix(mix(master ^ fnv1a(name)) + index)
//! ```
//!
//! where `mix` is the SplitMix64 finalizer and `fnv1a` the 64-bit FNV-1a hash
//! of the UTF-8 name. Substreams never depend on scheduling order, which is
//! what lets restarts, trees and synthetic runs execute in parallel while
//! reproducing the sequential result bit for bit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(name: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in name.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

/// Derive the seed of substream `(name, index)` under `master`.
pub fn derive(master: u64, name: &str, index: u64) -> u64 {
    mix(mix(master ^ fnv1a(name)).wrapping_add(index))
}

/// Deterministic RNG for a raw seed.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Deterministic RNG for a derived substream.
pub fn substream(master: u64, name: &str, index: u64) -> ChaCha8Rng {
    rng(derive(master, name, index))
}
