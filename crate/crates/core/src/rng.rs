//! Counter-derived random streams.
//!
//! Every random draw in a run descends from one root seed. A stream is named by
//! the root seed plus a path of integer labels (stage, iteration, role, draw
//! index), so the numbers a draw sees never depend on the order in which work
//! is scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Labels for the pipeline stages that consume randomness.
pub mod stage {
    pub const DATA: u64 = 1;
    pub const CONSTRUCTION: u64 = 2;
    pub const CHAIN: u64 = 3;
    pub const NESTED: u64 = 4;
    pub const TRUTH: u64 = 5;
}

/// Roles of nested importance-sampling batches within an iteration.
pub mod role {
    pub const INITIAL: u64 = 0;
    pub const PROPOSED: u64 = 1;
    pub const CURRENT: u64 = 2;
}

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A position in the stream tree. Cheap to copy; `rng()` materializes a generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey(u64);

impl StreamKey {
    pub fn root(seed: u64) -> Self {
        Self(mix(seed))
    }

    /// Child stream identified by `label`.
    pub fn child(self, label: u64) -> Self {
        Self(mix(self.0 ^ mix(label.wrapping_add(0x632B_E59B_D9B4_E019))))
    }

    pub fn path(self, labels: &[u64]) -> Self {
        labels.iter().fold(self, |k, &l| k.child(l))
    }

    pub fn rng(self) -> StreamRng {
        ChaCha8Rng::seed_from_u64(self.0)
    }
}
