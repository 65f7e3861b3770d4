//! Raw hidden-representation dump for external projection tools: one row
//! per (agent, visited state) holding the agent id, its greedy primitive
//! action, and the trunk-output activations. Headerless comma-separated
//! text, so the column count is exactly 2 + trunk width.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::agents::AgentGroup;
use crate::env::PentestEnv;
use crate::seeding::derive;

use super::run::TrainError;

/// Greedy rollouts of `episodes` episodes; returns the number of rows
/// written (steps taken times the number of agents).
pub fn dump_embeddings(
    group: &AgentGroup,
    env: &mut PentestEnv,
    episodes: usize,
    seed: u64,
    out: &mut impl Write,
) -> Result<usize, TrainError> {
    let mut rng = ChaCha20Rng::seed_from_u64(derive(seed, 0));
    let mut rows = 0usize;
    for episode in 0..episodes {
        let mut obs = env.reset(derive(seed, episode as u64 + 1));
        while !env.is_terminal() {
            let (digits, composed) = group.select_joint(&obs, 0.0, &mut rng);
            for (agent, &action) in group.agents().iter().zip(digits.digits()) {
                let features = agent.net().trunk_features(&obs)?;
                let mut line = String::with_capacity(16 + 8 * features.len());
                line.push_str(&agent.level().to_string());
                line.push(',');
                line.push_str(&action.to_string());
                for f in features {
                    line.push(',');
                    line.push_str(&f.to_string());
                }
                writeln!(out, "{line}")?;
                rows += 1;
            }
            let (next_obs, _, _, _) = env.step(composed)?;
            obs = next_obs;
        }
    }
    Ok(rows)
}
