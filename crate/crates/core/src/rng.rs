//! Counter-keyed random streams.
//!
//! Every random draw is addressed by `(seed, rotor, kick)`: the rotor selects a
//! ChaCha stream and the kick a fixed word offset inside it. Results therefore
//! do not depend on the order in which rotors are evolved.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// ChaCha words reserved for the draws of one rotor in one kick.
pub const WORDS_PER_KICK: u128 = 64;

/// Stream id reserved for ensemble preparation.
const PREPARATION_STREAM: u64 = u64::MAX;

/// Random stream for the noise of `rotor` during kick `kick`.
pub fn kick_stream(seed: u64, rotor: usize, kick: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rotor as u64);
    rng.set_word_pos(kick as u128 * WORDS_PER_KICK);
    rng
}

/// Random stream used to draw the initial quasimomenta.
pub fn preparation_stream(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(PREPARATION_STREAM);
    rng
}
