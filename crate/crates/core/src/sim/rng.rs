//! Counter-style random substreams.
//!
//! Every stream is ChaCha8 keyed by `seed_from_u64(seed)`, with the ChaCha
//! stream id set to the replication index and the word position offset by
//! `purpose << 36`. A replication's draws therefore depend only on
//! `(seed, replication, purpose)`, never on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Purpose {
    Scenario = 0,
    Orientation = 1,
    PortLoss = 2,
}

pub fn substream(seed: u64, replication: u64, purpose: Purpose) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replication);
    rng.set_word_pos((purpose as u128) << 36);
    rng
}
