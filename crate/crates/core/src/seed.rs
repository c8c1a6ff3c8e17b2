//! Root-seed splitting.
//!
//! Every random stream in the pipeline is derived from a single root seed
//! plus a stage tag and a small path of indices (replicate, bin, ...), so a
//! stage can be re-run on its own and still see the same numbers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Pipeline stage owning a random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stage {
    Generation,
    Simulation,
    Shuffle,
    Bootstrap,
}

impl Stage {
    fn tag(self) -> u64 {
        match self {
            Stage::Generation => 0x67656e65,
            Stage::Simulation => 0x73696d75,
            Stage::Shuffle => 0x73687566,
            Stage::Bootstrap => 0x626f6f74,
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed from `root`, a stage and an index path.
pub fn derive(root: u64, stage: Stage, path: &[u64]) -> u64 {
    let mut h = splitmix64(root ^ stage.tag());
    for &p in path {
        h = splitmix64(h ^ splitmix64(p.wrapping_add(0x5851_f42d_4c95_7f2d)));
    }
    h
}

/// Deterministic generator for a seed.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
