//! The single seeded generator behind all sampling.
//!
//! `xoshiro256++`, with its 256-bit state expanded from the 64-bit seed by
//! SplitMix64 (increment `0x9e3779b97f4a7c15`, multipliers
//! `0xbf58476d1ce4e5b9` and `0x94d049bb133111eb`). Uniform `f64`s take the
//! top 53 bits of a draw and scale them by `2^-53`.

use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

pub type SeededRng = Xoshiro256PlusPlus;

pub fn seeded(seed: u64) -> SeededRng {
    Xoshiro256PlusPlus::seed_from_u64(seed)
}
