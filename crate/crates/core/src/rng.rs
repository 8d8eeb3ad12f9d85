//! Seeded random streams.
//!
//! Each logical consumer draws from its own ChaCha8 stream keyed by
//! `(seed, StreamId)`, so changing how often one consumer draws never
//! shifts another consumer's sequence.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StreamId {
    Environment,
    Scheduler,
    Policy,
    Replay,
    Reward,
}

impl StreamId {
    fn code(self) -> u64 {
        match self {
            StreamId::Environment => 1,
            StreamId::Scheduler => 2,
            StreamId::Policy => 3,
            StreamId::Replay => 4,
            StreamId::Reward => 5,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RandomStream {
    seed: u64,
    id: StreamId,
    rng: ChaCha8Rng,
}

impl RandomStream {
    pub fn new(seed: u64, id: StreamId) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(id.code());
        Self { seed, id, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn id(&self) -> StreamId {
        self.id
    }

    /// Repositions the stream at an absolute 64-bit word offset.
    ///
    /// Used for counter-style access where draw `i` must not depend on how
    /// many draws preceded it.
    pub(crate) fn seek_word(&mut self, word: u128) {
        self.rng.set_word_pos(word);
    }
}

impl RngCore for RandomStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}
