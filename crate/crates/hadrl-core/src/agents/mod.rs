//! HA-DRL agent group and replay machinery.

mod agent;
mod checkpoint;
mod group;
mod replay;

pub use agent::{Agent, AgentError};
pub use checkpoint::{load_group, save_group, GroupCheckpointError};
pub use group::{build_baseline, AgentGroup, GroupConfig};
pub use replay::{ReplayBuffer, SampledBatch, Transition};
