//! Purpose-keyed random streams.
//!
//! Every draw in the simulator comes from a ChaCha stream derived from
//! `(seed, purpose, entity, counter)`. Two runs that differ only in whether
//! NCRs exist therefore see the same mobility, shadowing and fading draws for
//! every entity they share.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Purpose {
    Spawn = 1,
    Mobility = 2,
    Shadowing = 3,
    Paths = 4,
    Phases = 5,
    Test = 99,
}

#[inline]
fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stable 64-bit identifier for a directed or undirected entity pair.
pub fn pair_key(kind: u64, a: u64, b: u64) -> u64 {
    splitmix(kind ^ splitmix(a ^ splitmix(b.wrapping_add(0x5851_F42D_4C95_7F2D))))
}

/// Stream for one `(seed, purpose, entity, counter)` key.
pub fn keyed(seed: u64, purpose: Purpose, entity: u64, counter: u64) -> SimRng {
    let mut key = [0u8; 32];
    let words = [
        splitmix(seed),
        splitmix(purpose as u64 ^ 0xA5A5_A5A5),
        splitmix(entity ^ 0x1234_5678_9ABC_DEF0),
        splitmix(counter ^ 0x0F0F_0F0F_0F0F_0F0F),
    ];
    for (chunk, w) in key.chunks_exact_mut(8).zip(words) {
        chunk.copy_from_slice(&w.to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}
