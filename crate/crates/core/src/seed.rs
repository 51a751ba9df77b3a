//! Counter-based seed derivation.
//!
//! Every random stream is keyed by `(base seed, trial, purpose)`, so adding
//! trials or new consumers never shifts the streams of existing ones.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Purposes that draw independent random streams from one base seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Split = 1,
    Generate = 2,
    MonteCarlo = 3,
    Shuffle = 4,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive(base: u64, trial: u64, purpose: Purpose) -> u64 {
    let a = splitmix64(base);
    let b = splitmix64(a ^ trial.wrapping_mul(0xD6E8_FEB8_6659_FD93));
    splitmix64(b ^ (purpose as u64).wrapping_mul(0xA076_1D64_78BD_642F))
}

pub fn rng(base: u64, trial: u64, purpose: Purpose) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(base, trial, purpose))
}
