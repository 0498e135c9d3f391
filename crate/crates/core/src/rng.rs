//! Seedable PRNG used for every randomised operation.

use rand::SeedableRng;

/// xoshiro256++: fast, 64-bit, reproducible across platforms.
pub type Rng = rand_xoshiro::Xoshiro256PlusPlus;

pub fn seeded(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}
