//! Deterministic RNG substreams.
//!
//! A run has one master seed. Every stage, trial or batch gets its own
//! ChaCha8 stream: the generator is keyed by the master seed and the stream
//! id is a SplitMix64 fold of the numeric path (for example
//! `[trial, stage, batch]`). Streams with distinct paths never overlap, so
//! work can be scheduled in any order without changing results.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stream id for a path; the empty path maps to stream 0.
pub fn stream_id(path: &[u64]) -> u64 {
    path.iter()
        .fold(0u64, |acc, &p| splitmix64(acc ^ splitmix64(p.wrapping_add(1))))
}

/// The generator for `path` under `seed`.
pub fn substream(seed: u64, path: &[u64]) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id(path));
    rng
}

/// Human-readable rendering of a path, used in trace logs and manifests.
pub fn path_label(path: &[u64]) -> String {
    path.iter().map(|p| p.to_string()).collect::<Vec<_>>().join("/")
}
