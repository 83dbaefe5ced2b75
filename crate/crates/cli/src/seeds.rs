//! Per-task seed derivation.
//!
//! Every random draw in the harness comes from `derive_seed(base_seed, stream, index)`:
//! `stream` names the consumer (see the constants below) and `index` the task,
//! e.g. the feature count of a random-selection baseline. The result depends only
//! on those three numbers, so running tasks concurrently cannot change it.
//! k-means restarts are the exception: repeat `r` always uses `base_seed + r`,
//! which pairs the restarts across all cells of a sweep.

pub const RANDOM_BASELINE: u64 = 1;
pub const BENCH_DATA: u64 = 2;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(base_seed: u64, stream: u64, index: u64) -> u64 {
    splitmix64(base_seed ^ splitmix64(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ index))
}
