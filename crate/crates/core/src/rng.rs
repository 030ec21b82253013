//! Counter-based randomness derivation.
//!
//! Every trial of every experiment draws from a ChaCha8 stream addressed by
//! `(master seed, domain, trial index, role)`. Results therefore never
//! depend on how trials are scheduled across worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type TrialRng = ChaCha8Rng;

/// Independent randomness consumers inside a single trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    /// Challenger coins: user choice, PIE randomness, the hidden bit.
    Challenger = 0,
    /// Noise of the challenger's sampling oracle.
    ChallengerOracle = 1,
    /// Adversary coins.
    Adversary = 2,
    /// Noise of the adversary's sampling oracle.
    AdversaryOracle = 3,
}

const ROLES: u64 = 4;

/// A named region of seed space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedSpace {
    master: u64,
    domain: u64,
}

impl SeedSpace {
    pub fn new(master: u64) -> Self {
        SeedSpace { master, domain: 0 }
    }

    pub fn master(&self) -> u64 {
        self.master
    }

    /// Sub-space for a labelled consumer. Derivation is a pure function of
    /// the parent and the label.
    pub fn derive(&self, label: &str) -> SeedSpace {
        SeedSpace { master: self.master, domain: splitmix64(self.domain ^ fnv1a(label.as_bytes())) }
    }

    pub fn rng(&self, trial: u64, role: Role) -> TrialRng {
        let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(self.master ^ splitmix64(self.domain)));
        rng.set_stream(trial.wrapping_mul(ROLES).wrapping_add(role as u64));
        rng
    }

    /// Single stream not tied to a trial, for one-off draws such as
    /// population generation.
    pub fn single(&self) -> TrialRng {
        self.rng(u64::MAX / ROLES, Role::Challenger)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}
