//! Independent random streams keyed by `(seed, trial, attempt, role)`.
//!
//! ChaCha's 64-bit stream id is used as the counter: every combination maps
//! to a distinct stream of the same keyed generator, so results never depend
//! on which thread ran a trial or in which order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a stream is used for within one trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamRole {
    /// Positions of BS tier `i` (`i < 240`).
    Tier(usize),
    Users,
    Probes,
    Fading,
}

impl StreamRole {
    fn code(self) -> u64 {
        match self {
            StreamRole::Tier(i) => {
                assert!(i < 240, "at most 240 tiers are supported");
                i as u64
            }
            StreamRole::Users => 250,
            StreamRole::Probes => 251,
            StreamRole::Fading => 252,
        }
    }
}

pub fn stream(seed: u64, trial: u64, attempt: u8, role: StreamRole) -> ChaCha8Rng {
    assert!(trial < 1 << 48, "trial index out of range");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((trial << 16) | ((attempt as u64) << 8) | role.code());
    rng
}
