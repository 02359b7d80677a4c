//! Per-sample random streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SampleRng = ChaCha8Rng;

/// Independent generator for sample `index` under `master` seed.
///
/// The stream depends only on `(master, index)`, never on which worker
/// thread runs the sample or in what order.
pub fn stream(master: u64, index: u64) -> SampleRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(index);
    rng
}
