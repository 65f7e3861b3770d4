//! Embedded scenario library and name/file resolution.

use std::collections::BTreeSet;
use std::path::Path;

use super::config::parse_scenario_file;
use super::scenario::{RewardScheme, ScenarioError, ScenarioSpec};

/// Optional override of the preset search path: when set, `<dir>/<name>.scenario`
/// wins over the embedded preset of the same name.
pub const PRESET_DIR_ENV: &str = "HADRL_PRESET_DIR";

pub fn preset_names() -> &'static [&'static str] {
    &["tiny", "s6", "mid", "s24", "s50"]
}

/// Builds an embedded preset by name.
///
/// * `tiny` — 6 hosts / 2 subnets / 1 flag, deterministic exploits; 84 actions.
/// * `s6`   — 6 hosts / 2 subnets / 2 flags; 84 actions.
/// * `mid`  — 15 hosts / 5 chained subnets / 2 flags; 525 actions.
/// * `s24`  — 24 hosts / 1 public + 7 private subnets / 2 flags; 1344 actions.
/// * `s50`  — 50 hosts / 1 public + 9 private subnets / 2 flags; 5500 actions.
pub fn preset(name: &str) -> Result<ScenarioSpec, ScenarioError> {
    let spec = match name {
        "tiny" => ScenarioSpec {
            name: "tiny".into(),
            hosts: 6,
            subnets: 2,
            subnet_of: vec![0, 0, 0, 1, 1, 1],
            adjacency: ScenarioSpec::chain_adjacency(2),
            flag_hosts: BTreeSet::from([4]),
            foothold: 0,
            exploit_prob: 1.0,
            step_limit: 50,
            host_to_host_types: 2,
            host_to_subnet_types: 1,
            on_host_types: 2,
            rewards: RewardScheme::default(),
        },
        "s6" => ScenarioSpec {
            name: "s6".into(),
            hosts: 6,
            subnets: 2,
            subnet_of: vec![0, 0, 0, 1, 1, 1],
            adjacency: ScenarioSpec::chain_adjacency(2),
            flag_hosts: BTreeSet::from([3, 5]),
            foothold: 0,
            exploit_prob: 0.9,
            step_limit: 200,
            host_to_host_types: 2,
            host_to_subnet_types: 1,
            on_host_types: 2,
            rewards: RewardScheme::default(),
        },
        "mid" => ScenarioSpec {
            name: "mid".into(),
            hosts: 15,
            subnets: 5,
            subnet_of: (0..15).map(|h| h / 3).collect(),
            adjacency: ScenarioSpec::chain_adjacency(5),
            flag_hosts: BTreeSet::from([5, 8]),
            foothold: 0,
            exploit_prob: 0.9,
            step_limit: 200,
            host_to_host_types: 2,
            host_to_subnet_types: 1,
            on_host_types: 2,
            rewards: RewardScheme::default(),
        },
        "s24" => ScenarioSpec {
            name: "s24".into(),
            hosts: 24,
            subnets: 8,
            subnet_of: (0..24).map(|h| h / 3).collect(),
            adjacency: ScenarioSpec::star_adjacency(8),
            flag_hosts: BTreeSet::from([17, 23]),
            foothold: 0,
            exploit_prob: 0.9,
            step_limit: 300,
            host_to_host_types: 2,
            host_to_subnet_types: 1,
            on_host_types: 2,
            rewards: RewardScheme::default(),
        },
        "s50" => ScenarioSpec {
            name: "s50".into(),
            hosts: 50,
            subnets: 10,
            subnet_of: (0..50).map(|h| h / 5).collect(),
            adjacency: ScenarioSpec::star_adjacency(10),
            flag_hosts: BTreeSet::from([29, 49]),
            foothold: 0,
            exploit_prob: 0.9,
            step_limit: 400,
            host_to_host_types: 2,
            host_to_subnet_types: 1,
            on_host_types: 2,
            rewards: RewardScheme::default(),
        },
        other => return Err(ScenarioError::UnknownScenario(other.to_string())),
    };
    spec.validate()?;
    Ok(spec)
}

/// Resolves a scenario argument: an existing file path wins, then a
/// `<name>.scenario` file under [`PRESET_DIR_ENV`], then the embedded
/// preset of that name.
pub fn resolve_scenario(arg: &str) -> Result<ScenarioSpec, ScenarioError> {
    let as_path = Path::new(arg);
    if as_path.is_file() {
        return parse_scenario_file(as_path);
    }
    if let Ok(dir) = std::env::var(PRESET_DIR_ENV) {
        let candidate = Path::new(&dir).join(format!("{arg}.scenario"));
        if candidate.is_file() {
            return parse_scenario_file(&candidate);
        }
    }
    preset(arg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_presets_validate_and_match_count_formula() {
        for &name in preset_names() {
            let spec = preset(name).unwrap();
            let p = spec.hosts;
            let q = spec.subnets;
            let expected = spec.host_to_host_types * p * (p - 1)
                + spec.host_to_subnet_types * p * q
                + spec.on_host_types * p;
            assert_eq!(spec.total_actions(), expected, "{name}");
            assert_eq!(spec.action_catalog().len(), expected, "{name}");
        }
    }

    #[test]
    fn preset_sizes_are_pinned() {
        assert_eq!(preset("tiny").unwrap().total_actions(), 84);
        assert_eq!(preset("s6").unwrap().total_actions(), 84);
        assert_eq!(preset("mid").unwrap().total_actions(), 525);
        assert_eq!(preset("s24").unwrap().total_actions(), 1344);
        assert_eq!(preset("s50").unwrap().total_actions(), 5500);
    }

    #[test]
    fn unknown_names_are_rejected() {
        assert!(matches!(
            preset("nope"),
            Err(ScenarioError::UnknownScenario(_))
        ));
    }
}
