//! Named, independent random streams.
//!
//! Every consumer of randomness draws from a ChaCha8 stream selected by a
//! `(purpose, node)` pair under a per-repetition key, so adding draws for one
//! purpose never shifts the sequence seen by another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[repr(u32)]
pub enum Purpose {
    Placement = 1,
    Mobility = 2,
    Trickle = 3,
    Mac = 4,
    Radio = 5,
    App = 6,
    WakePhase = 7,
    Nd = 8,
    Scratch = 9,
    Dao = 10,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StreamId {
    pub purpose: Purpose,
    pub node: u32,
}

impl StreamId {
    pub fn new(purpose: Purpose, node: u32) -> Self {
        StreamId { purpose, node }
    }

    fn word(self) -> u64 {
        ((self.purpose as u64) << 32) | self.node as u64
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Key for repetition `rep` of a run seeded with `seed`.
pub fn repetition_seed(seed: u64, rep: u32) -> u64 {
    let mut s = seed ^ (rep as u64).wrapping_mul(0xD1B5_4A32_D192_ED03);
    splitmix64(&mut s)
}

/// Opens the stream `id` under `seed`.
pub fn stream(seed: u64, id: StreamId) -> SimRng {
    let mut state = seed;
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(id.word());
    rng
}
