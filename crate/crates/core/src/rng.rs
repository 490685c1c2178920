//! Seed derivation.
//!
//! All randomness flows from one 64-bit seed. Independent tasks (a curve
//! point, a verification check, a Monte Carlo batch) get their own stream
//! from `(seed, task index)`, so results never depend on scheduling order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type TaskRng = ChaCha8Rng;

pub const DEFAULT_SEED: u64 = 42;

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the `task`-th stream derived from `seed`.
pub fn derive_seed(seed: u64, task: u64) -> u64 {
    mix(mix(seed) ^ task.wrapping_mul(0xD1B5_4A32_D192_ED03))
}

pub fn task_rng(seed: u64, task: u64) -> TaskRng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, task))
}
