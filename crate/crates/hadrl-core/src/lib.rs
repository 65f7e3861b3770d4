//! Hierarchical-agent deep Q-learning for large discrete action spaces.
//!
//! The crate factors a flat integer action space into a few small
//! per-level sub-spaces (mixed-radix digits), trains one dueling DQN
//! learner per level against a shared replay buffer, and evaluates the
//! result on a seedable penetration-testing simulator with a BFS oracle
//! for desk-scale verification.

pub mod action_algebra;
pub mod agents;
pub mod env;
pub mod nn;
pub mod trainer;

pub(crate) mod seeding {
    /// splitmix64 over (base, stream): cheap independent sub-seeds.
    pub fn derive(base: u64, stream: u64) -> u64 {
        let mut x = base ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
        x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = x;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
}
