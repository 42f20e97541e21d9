//! Seeded random streams.
//!
//! Every run derives all of its randomness from a single `u64` seed. Each
//! subsystem draws from its own ChaCha stream so that switching one subsystem
//! on or off leaves the draws of the others untouched.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Named child streams of a run seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stream {
    /// Alice's pattern choice and photon-number draws.
    Source,
    /// Channel and coupler thinning.
    Channel,
    /// Bob's interferometer outcome and intra-bin arrival position.
    Interferometer,
    /// Detector efficiency, jitter, dark counts and afterpulses.
    Detector,
    /// Eavesdropper measurement and resend choices.
    Attack,
    /// Modulator leakage photons between pulses.
    Leakage,
}

impl Stream {
    fn id(self) -> u64 {
        match self {
            Stream::Source => 1,
            Stream::Channel => 2,
            Stream::Interferometer => 3,
            Stream::Detector => 4,
            Stream::Attack => 5,
            Stream::Leakage => 6,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RngStreams {
    seed: u64,
}

impl RngStreams {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self, stream: Stream) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream.id());
        rng
    }

    /// An extra stream for work outside the fixed subsystem set (sweep grid
    /// points, per-N attack runs).
    pub fn indexed(&self, index: u64) -> RngStreams {
        RngStreams::new(
            self.seed
                .wrapping_mul(0x9E37_79B9_7F4A_7C15)
                .wrapping_add(index.wrapping_add(1)),
        )
    }
}
