//! Seed derivation.
//!
//! All randomness in a run flows from one user-visible seed. Independent
//! streams are derived by mixing the seed with a purpose tag and indices
//! (learner, timestep, node, walk), so concurrent work stays reproducible
//! regardless of scheduling.

/// Purpose tags for derived streams.
pub mod tag {
    pub const WALKS: u64 = 0x01;
    pub const SHUFFLE: u64 = 0x02;
    pub const INIT: u64 = 0x03;
    pub const TRAIN: u64 = 0x04;
    pub const LP_NEG: u64 = 0x05;
    pub const LP_TEST_NEG: u64 = 0x06;
    pub const RUN: u64 = 0x07;
    pub const CONTROL: u64 = 0x08;
    pub const GEN: u64 = 0x09;
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mix an ordered list of parts into one stream seed.
pub fn mix(parts: &[u64]) -> u64 {
    let mut acc = 0x51_7c_c1_b7_27_22_0a_95u64;
    for &p in parts {
        acc = splitmix64(acc ^ splitmix64(p));
    }
    acc
}

/// Stream seed for a (purpose, learner, timestep) triple.
pub fn derive(seed: u64, purpose: u64, learner: u64, timestep: u64) -> u64 {
    mix(&[seed, purpose, learner, timestep])
}
