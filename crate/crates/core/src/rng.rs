//! Seedable, splittable random number streams.
//!
//! Every random quantity in the crate is drawn from [`stream`], a ChaCha8
//! generator keyed by a seed and a stream index, so independent components
//! (fBm coordinates, ensemble members) never share state.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator used throughout the crate.
pub type Rng = ChaCha8Rng;

/// Generator for `(seed, stream)`. Different streams of one seed are independent.
pub fn stream(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
