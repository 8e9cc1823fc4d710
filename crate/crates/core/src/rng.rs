//! Named random substreams derived from a single run seed.
//!
//! Every consumer of randomness (initialisation, training samples, test
//! samples, permutations) draws from its own ChaCha stream so that changing
//! one part of a run never perturbs the others.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Init = 1,
    TrainClass1 = 2,
    TrainClass2 = 3,
    TestClass1 = 4,
    TestClass2 = 5,
    Permutation = 6,
    MonteCarlo = 7,
}

/// Stream `kind` of `seed`; `index` separates repeated uses such as epochs.
pub fn substream(seed: u64, kind: Stream, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((kind as u64) << 48) ^ index);
    rng
}
