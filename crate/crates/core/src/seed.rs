//! Deterministic seed derivation.
//!
//! Every stochastic choice in a game is drawn from a generator seeded by
//! [`derive`], so a single master seed fans out into independent streams
//! (role assignment, per-seat votes, per-game seeds in a batch) that do not
//! depend on evaluation order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator used everywhere a seeded random choice is needed.
pub type GameRng = ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from `parent`, a domain label and an index.
///
/// Distinct `(label, index)` pairs give statistically independent children.
pub fn derive(parent: u64, label: &str, index: u64) -> u64 {
    let mut h = splitmix64(parent);
    for b in label.bytes() {
        h = splitmix64(h ^ u64::from(b));
    }
    splitmix64(h ^ splitmix64(index.wrapping_add(GOLDEN)))
}

pub fn rng(seed: u64) -> GameRng {
    ChaCha8Rng::seed_from_u64(seed)
}
