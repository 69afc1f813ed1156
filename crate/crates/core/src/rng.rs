//! Seed derivation.
//!
//! Every random quantity is drawn from a stream identified by
//! `(master seed, purpose, index)`. Streams are independent of the order in
//! which they are requested, so trials can run on any number of threads and
//! still reproduce bit-for-bit.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

pub type SimRng = ChaCha12Rng;

/// What a derived stream is used for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Purpose {
    Train = 1,
    Test = 2,
    Beta = 3,
    Folds = 4,
    Split = 5,
    Tau = 6,
    Audit = 7,
    Stability = 8,
    Trial = 9,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives the seed of stream `(purpose, index)` under `master`.
pub fn derive_seed(master: u64, purpose: Purpose, index: u64) -> u64 {
    let a = splitmix64(master);
    let b = splitmix64(a ^ (purpose as u64).wrapping_mul(0xd6e8_feb8_6659_fd93));
    splitmix64(b ^ index.wrapping_mul(0xa076_1d64_78bd_642f))
}

pub fn rng_from_seed(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

pub fn stream(master: u64, purpose: Purpose, index: u64) -> SimRng {
    rng_from_seed(derive_seed(master, purpose, index))
}
