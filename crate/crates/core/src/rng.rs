//! Counter-based random substreams.
//!
//! Every draw is keyed by `(seed, purpose, step, member, replicate)`, so the
//! numbers a row receives do not depend on which thread handles it or in which
//! order rows are processed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum StreamPurpose {
    Measurements = 1,
    InitialEnsemble = 2,
    Likelihood = 3,
    Oracle = 4,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SeedStreams {
    seed: u64,
}

impl SeedStreams {
    pub fn new(seed: u64) -> Self {
        SeedStreams { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self, purpose: StreamPurpose, step: u64, member: u64, replicate: u64) -> ChaCha8Rng {
        let mut state = self.seed;
        for word in [purpose as u64, step, member, replicate] {
            state = splitmix64(state ^ splitmix64(word));
        }
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            state = splitmix64(state);
            chunk.copy_from_slice(&state.to_le_bytes());
        }
        ChaCha8Rng::from_seed(key)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
