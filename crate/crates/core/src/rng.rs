//! Seeded random streams.
//!
//! Every consumer of randomness draws from its own ChaCha8 stream derived from
//! the run seed and a fixed [`Stream`] id, so adding draws for one purpose
//! never shifts the sequence seen by another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Purpose-specific sub-stream ids.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Frequencies = 0,
    Phases = 1,
    /// Start-point perturbation of the inner solve.
    InitPerturbation = 2,
    /// Perturbation of the next measurement point.
    NextPerturbation = 3,
    Noise = 4,
    InitialPoint = 5,
    Data = 6,
    MonteCarlo = 7,
}

pub fn stream_rng(seed: u64, stream: Stream) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

/// Stream for the `index`-th independent Monte-Carlo draw under `seed`.
pub fn draw_rng(seed: u64, index: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((Stream::MonteCarlo as u64) << 48 | index);
    rng
}
