//! Seeded, stream-separated random number generation.

use faer::c64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Independent random streams drawn from one seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Circuit = 1,
    Pairing = 2,
    Product = 3,
}

/// A ChaCha generator for `seed`, positioned on the given stream.
pub fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

/// Seed of one realization: `master ^ index`.
pub fn realization_seed(master_seed: u64, realization: u64) -> u64 {
    master_seed ^ realization
}

/// Complex number with independent standard-normal real and imaginary parts.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> c64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c64::new(re, im)
}
