//! The repository's pinned pseudo-random number generator.
//!
//! Every sampled value in this project (synthetic tensors, Gibbs sampling)
//! comes from SplitMix64 so that independent implementations in any language
//! can reproduce identical streams. The recipe, with its published constants:
//!
//! ```text
//! state := seed
//! next_u64():
//!     state  = state + 0x9E3779B97F4A7C15   (mod 2^64)
//!     z      = state
//!     z      = (z XOR (z >> 30)) * 0xBF58476D1CE4E5B9   (mod 2^64)
//!     z      = (z XOR (z >> 27)) * 0x94D049BB133111EB   (mod 2^64)
//!     return z XOR (z >> 31)
//! ```
//!
//! Derived streams:
//! - `next_f64_unit`: top 53 bits scaled by 2^-53, uniform in [0, 1).
//! - `next_f32_centered`: top 24 bits scaled by 2^-24, minus 0.5,
//!   uniform in [-0.5, 0.5).

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
const MIX_A: u64 = 0xBF58_476D_1CE4_E5B9;
const MIX_B: u64 = 0x94D0_49BB_1331_11EB;

/// SplitMix64 generator state.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(MIX_A);
        z = (z ^ (z >> 27)).wrapping_mul(MIX_B);
        z ^ (z >> 31)
    }

    /// Uniform f64 in [0, 1) with 53 bits of precision.
    pub fn next_f64_unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform f32 in [-0.5, 0.5). The 24-bit fraction is exactly
    /// representable, so the stream is bit-identical on every platform.
    pub fn next_f32_centered(&mut self) -> f32 {
        (self.next_u64() >> 40) as f32 * (1.0 / (1u64 << 24) as f32) - 0.5
    }
}
