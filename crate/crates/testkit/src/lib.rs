//! Slow, direct reference implementations and random input generators for
//! tests. Oracles here read only the raw axiom set and never call the
//! indexed query methods of the code under test.

pub mod gen;
pub mod oracle;

use rand::rngs::StdRng;
use rand::SeedableRng;

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}
