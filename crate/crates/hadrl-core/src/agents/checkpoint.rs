//! Checkpoint directory: one parameter file per agent plus a manifest
//! recording the plan radices, discount, exploration state, and update
//! counters.
//!
//! ```text
//! <dir>/manifest.txt
//! <dir>/agent_0.net
//! <dir>/agent_1.net
//! ...
//! ```

use std::path::Path;

use thiserror::Error;

use crate::action_algebra::{DecompositionPlan, PlanError};
use crate::nn::{load_network, save_network, CheckpointError};

use super::agent::AgentError;
use super::group::{AgentGroup, GroupConfig};

pub const MANIFEST_FORMAT: &str = "hadrl-checkpoint-v1";

#[derive(Debug, Error)]
pub enum GroupCheckpointError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Network(#[from] CheckpointError),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error("manifest {path}: {message}")]
    BadManifest { path: String, message: String },
}

pub fn save_group(group: &AgentGroup, dir: &Path) -> Result<(), GroupCheckpointError> {
    std::fs::create_dir_all(dir)?;
    let plan = group.plan();
    let radices: Vec<String> = plan.radices().iter().map(|r| r.to_string()).collect();
    let counters: Vec<String> = group
        .agents()
        .iter()
        .map(|a| a.updates().to_string())
        .collect();
    let manifest = format!(
        "format = {}\ntotal_actions = {}\nradices = {}\ngamma = {}\nepsilon = {}\nupdate_counters = {}\n",
        MANIFEST_FORMAT,
        plan.total_actions(),
        radices.join(","),
        group.gamma(),
        group.epsilon(),
        counters.join(","),
    );
    std::fs::write(dir.join("manifest.txt"), manifest)?;
    for (level, agent) in group.agents().iter().enumerate() {
        save_network(agent.net(), &dir.join(format!("agent_{level}.net")))?;
    }
    Ok(())
}

pub fn load_group(dir: &Path, config: &GroupConfig) -> Result<AgentGroup, GroupCheckpointError> {
    let manifest_path = dir.join("manifest.txt");
    let text = std::fs::read_to_string(&manifest_path)?;
    let field = |key: &str| -> Result<String, GroupCheckpointError> {
        for line in text.lines() {
            if let Some((k, v)) = line.split_once('=') {
                if k.trim() == key {
                    return Ok(v.trim().to_string());
                }
            }
        }
        Err(GroupCheckpointError::BadManifest {
            path: manifest_path.display().to_string(),
            message: format!("missing key {key}"),
        })
    };
    let bad = |message: String| GroupCheckpointError::BadManifest {
        path: manifest_path.display().to_string(),
        message,
    };

    let format = field("format")?;
    if format != MANIFEST_FORMAT {
        return Err(bad(format!("unsupported format '{format}'")));
    }
    let total_actions: usize = field("total_actions")?
        .parse()
        .map_err(|e| bad(format!("bad total_actions: {e}")))?;
    let radices: Vec<usize> = field("radices")?
        .split(',')
        .map(|r| r.trim().parse())
        .collect::<Result<_, _>>()
        .map_err(|e| bad(format!("bad radices: {e}")))?;
    let epsilon: f64 = field("epsilon")?
        .parse()
        .map_err(|e| bad(format!("bad epsilon: {e}")))?;
    let gamma: f64 = field("gamma")?
        .parse()
        .map_err(|e| bad(format!("bad gamma: {e}")))?;
    let counters: Vec<u64> = field("update_counters")?
        .split(',')
        .map(|c| c.trim().parse())
        .collect::<Result<_, _>>()
        .map_err(|e| bad(format!("bad update_counters: {e}")))?;
    if counters.len() != radices.len() {
        return Err(bad("update_counters and radices disagree on level count".into()));
    }

    let plan = DecompositionPlan::from_radices(total_actions, radices)?;
    let nets = (0..plan.levels())
        .map(|level| load_network(&dir.join(format!("agent_{level}.net"))))
        .collect::<Result<Vec<_>, _>>()?;
    for (level, (net, &radix)) in nets.iter().zip(plan.radices()).enumerate() {
        if net.actions() != radix {
            return Err(bad(format!(
                "agent_{level}.net has head width {} but radix is {radix}",
                net.actions()
            )));
        }
    }

    let input_width = nets[0].arch().input_width();
    let mut loaded_config = config.clone();
    loaded_config.gamma = gamma;
    loaded_config.trunk = nets[0].arch().layers[1..].to_vec();
    loaded_config.value_hidden = nets[0].arch().value_hidden;
    let mut group = AgentGroup::new(plan, input_width, &loaded_config, 0)?;
    group.set_epsilon(epsilon);
    for ((agent, net), counter) in group.agents_mut().iter_mut().zip(nets).zip(counters) {
        agent.replace_net(net);
        agent.set_updates(counter);
    }
    Ok(group)
}
