//! Counter-based substreams: one independent ChaCha stream per replica.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type RandomStream = ChaCha8Rng;

/// Stream for replica `replica` of a run seeded with `master`.
///
/// The master seed fixes the ChaCha key and the replica index selects the
/// stream, so streams can be regenerated in any order.
pub fn seed_stream(master: u64, replica: u64) -> RandomStream {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(replica);
    rng.set_word_pos(0);
    rng
}
