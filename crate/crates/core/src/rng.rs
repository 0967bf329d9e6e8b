//! Counter-style random streams: every `(seed, step, index)` triple owns an
//! independent ChaCha stream, so draws never depend on evaluation order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Step index reserved for the initial latent draw.
pub(crate) const INIT_STEP: u64 = u32::MAX as u64;

pub(crate) fn stream(seed: u64, step: u64, index: u64) -> ChaCha8Rng {
    debug_assert!(step <= u32::MAX as u64 && index <= u32::MAX as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((step << 32) | index);
    rng
}
