//! Seekable random streams.
//!
//! Each trial owns one ChaCha key derived from `(master seed, trial)`. Every
//! [`Purpose`] is a separate ChaCha stream under that key, and each round
//! seeks to its own block of the stream. A draw therefore depends only on
//! `(seed, trial, purpose, round)`: a policy that skips an exploration coin
//! never shifts the reward draws of later rounds.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Words reserved per round within a stream. Rejection samplers never come
/// close to consuming this many.
const WORDS_PER_ROUND: u128 = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    RewardDraws = 0,
    ExplorationCoins = 1,
    UniformArmPicks = 2,
}

#[derive(Debug, Clone)]
pub struct TrialStreams {
    rngs: [ChaCha8Rng; 3],
}

impl TrialStreams {
    pub fn new(master_seed: u64, trial: u64) -> Self {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&master_seed.to_le_bytes());
        key[8..16].copy_from_slice(&trial.to_le_bytes());
        let make = |purpose: Purpose| {
            let mut rng = ChaCha8Rng::from_seed(key);
            rng.set_stream(purpose as u64);
            rng
        };
        Self {
            rngs: [
                make(Purpose::RewardDraws),
                make(Purpose::ExplorationCoins),
                make(Purpose::UniformArmPicks),
            ],
        }
    }

    /// The stream for `purpose`, positioned at the start of `round`'s block.
    pub fn at(&mut self, purpose: Purpose, round: usize) -> &mut ChaCha8Rng {
        let rng = &mut self.rngs[purpose as usize];
        rng.set_word_pos(round as u128 * WORDS_PER_ROUND);
        rng
    }
}
