//! Deterministic random substreams.
//!
//! Every random quantity in a run is drawn from ChaCha8 keyed by the run
//! seed, with the 64-bit ChaCha stream id selecting an independent
//! substream. The stream id mixes a [`Purpose`] tag with up to two indices
//! (typically SNR point and frame), so any frame can be regenerated without
//! touching the others and results do not depend on worker scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Named generator used for every substream.
pub type StreamRng = ChaCha8Rng;

/// What a substream is used for.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Data = 1,
    Dither = 2,
    Noise = 3,
    Fading = 4,
    Interleaver = 5,
    Capacity = 6,
}

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Substream `(purpose, a, b)` of `seed`.
pub fn substream(seed: u64, purpose: Purpose, a: u64, b: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let id = mix64(mix64(mix64(purpose as u64) ^ a) ^ b.rotate_left(17));
    rng.set_stream(id);
    rng
}
