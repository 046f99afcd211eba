//! Inputs to every other module: channels, PSK frames, the radar array and
//! its waveform, and bounded channel perturbations. All generators are pure
//! functions of their seed.

mod array;
mod channels;
mod symbols;
mod waveform;

pub use array::{steering_derivative, steering_outer, steering_vector, steering_vector_derivative, ArrayGeometry, RadarScene};
pub use channels::{gen_channels, perturb_channels, sample_ball, sample_sphere, ChannelEstimate, ChannelSet, ErrorBounds};
pub use symbols::{psk_frame, SymbolFrame, SymbolSlot};
pub use waveform::{msequence, radar_waveform, WaveformMode};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// RNG used by every generator in the crate.
pub type Rng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derive an independent child seed, so parallel workers never depend on
/// scheduling order (splitmix64 finaliser).
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
