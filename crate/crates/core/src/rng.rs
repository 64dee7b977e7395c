//! Deterministic random-stream derivation.
//!
//! Every stochastic component draws from its own ChaCha stream keyed by
//! `(base seed, trial index, purpose)`, so adding draws to one component never
//! shifts another, and trials are independent of scheduling order. Blockage
//! uses a counter-free field keyed per node pair so it can be queried in any
//! order and still return the same coin for the same pair.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent stochastic components of one trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamPurpose {
    /// Node counts, positions, roles, headings, speeds.
    Topology,
    /// Cache population and request draws.
    Content,
    /// Line-of-sight coin field.
    Blockage,
    /// Tie-breaking and random choices inside association.
    Association,
    /// Action sampling and update-set selection in the beamwidth game.
    Game,
    /// Small-scale fading draws.
    Fading,
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mix an ordered list of words into one well-scrambled key.
pub fn derive_key(parts: &[u64]) -> u64 {
    // Arbitrary non-zero start (binary digits of pi) so derive_key(&[0]) != 0.
    let mut acc: u64 = 0x243F_6A88_85A3_08D3;
    for &part in parts {
        let mut state = acc ^ part;
        acc = splitmix64(&mut state);
    }
    acc
}

/// ChaCha stream for one `(base seed, trial, purpose)` triple.
pub fn stream(base_seed: u64, trial: u64, purpose: StreamPurpose) -> ChaCha8Rng {
    let mut state = derive_key(&[base_seed, trial, purpose as u64]);
    let mut seed = [0u8; 32];
    for chunk in seed.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha8Rng::from_seed(seed)
}

/// Uniform draw in `[0, 1)` addressed by key words rather than stream order.
pub fn keyed_unit(parts: &[u64]) -> f64 {
    // 53 high bits -> [0, 1) with full double precision.
    (derive_key(parts) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}
