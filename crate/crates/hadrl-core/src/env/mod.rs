//! Seedable penetration-testing MDP.

mod config;
mod oracle;
mod presets;
mod scenario;
mod sim;

pub use config::parse_scenario_file;
pub use oracle::{oracle_optimal, OracleError, OracleResult, DEFAULT_STATE_BUDGET};
pub use presets::{preset, preset_names, resolve_scenario, PRESET_DIR_ENV};
pub use scenario::{Action, RewardScheme, ScenarioError, ScenarioSpec};
pub use sim::{EnvError, Observation, PentestEnv, StepInfo};
