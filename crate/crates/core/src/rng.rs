//! Counter-based random streams.
//!
//! Every simulated path owns a ChaCha8 stream addressed by
//! `(master seed, path index)`: the key comes from the seed and the stream id
//! is the path index, so a path's draws never depend on which worker ran it or
//! on how many other paths were simulated first.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

pub use rand_core::RngCore as Rng;

/// Random stream for one path.
pub fn path_stream(master_seed: u64, path_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(path_index);
    rng
}

/// Uniform draw on the open interval (0, 1).
#[inline]
pub fn open_unit<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / 9_007_199_254_740_992.0)
}

/// Standard exponential draw.
#[inline]
pub fn standard_exponential<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    -libm::log(open_unit(rng))
}
