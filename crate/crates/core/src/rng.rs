//! Seeded randomness.
//!
//! Every stochastic operation takes an explicit [`Rng`]. The generator is ChaCha8 from
//! `rand_chacha` 0.3, whose output stream is stable across platforms and releases of that
//! crate, so a seed reproduces the same splits and models for a given version of this crate.

use rand::SeedableRng;

pub use rand::Rng as RngExt;

pub type Rng = rand_chacha::ChaCha8Rng;

pub fn seeded(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}

/// Uniform draw from `[-bound, bound]`.
#[inline]
pub(crate) fn uniform_sym(rng: &mut Rng, bound: f64) -> f64 {
    use rand::Rng as _;
    (rng.gen::<f64>() * 2.0 - 1.0) * bound
}
