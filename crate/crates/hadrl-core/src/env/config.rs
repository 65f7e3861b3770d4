//! Line-oriented scenario config files.
//!
//! ```text
//! [network]
//! hosts = 6
//! subnets = 2
//! subnet_of = 0,0,0,1,1,1
//! adjacency = 0-1
//! [flags]
//! hosts = 4
//! [agent]
//! foothold = 0
//! [dynamics]
//! exploit_prob = 1.0
//! step_limit = 50
//! [actions]
//! m = 2
//! n = 1
//! o = 2
//! ```
//!
//! `adjacency` lists cross-subnet pairs separated by semicolons; both
//! directions and every self pair are implied. Blank lines and `#`
//! comments are skipped. Unknown sections or keys are errors. The
//! `[dynamics]` and `[actions]` sections are optional (defaults: 0.9,
//! 500, m=2 n=1 o=2); everything else is required.

use std::collections::BTreeSet;
use std::path::Path;

use super::scenario::{RewardScheme, ScenarioError, ScenarioSpec};

#[derive(Default)]
struct Raw {
    hosts: Option<usize>,
    subnets: Option<usize>,
    subnet_of: Option<Vec<usize>>,
    adjacency_pairs: Option<Vec<(usize, usize)>>,
    flag_hosts: Option<Vec<usize>>,
    foothold: Option<usize>,
    exploit_prob: Option<f64>,
    step_limit: Option<usize>,
    m: Option<usize>,
    n: Option<usize>,
    o: Option<usize>,
}

pub fn parse_scenario_file(path: &Path) -> Result<ScenarioSpec, ScenarioError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ScenarioError::Io(format!("{}: {e}", path.display())))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "scenario".to_string());
    parse_scenario_text(&text, &name)
}

pub fn parse_scenario_text(text: &str, name: &str) -> Result<ScenarioSpec, ScenarioError> {
    let mut raw = Raw::default();
    let mut section = String::new();

    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(stripped) = line.strip_prefix('[') {
            let Some(sec) = stripped.strip_suffix(']') else {
                return parse_err(line_no, "unterminated section header");
            };
            match sec {
                "network" | "flags" | "agent" | "dynamics" | "actions" => {
                    section = sec.to_string();
                }
                other => return parse_err(line_no, &format!("unknown section [{other}]")),
            }
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return parse_err(line_no, "expected `key = value`");
        };
        let key = key.trim();
        let value = value.trim();
        match (section.as_str(), key) {
            ("network", "hosts") => raw.hosts = Some(parse_num(line_no, value)?),
            ("network", "subnets") => raw.subnets = Some(parse_num(line_no, value)?),
            ("network", "subnet_of") => raw.subnet_of = Some(parse_list(line_no, value)?),
            ("network", "adjacency") => raw.adjacency_pairs = Some(parse_pairs(line_no, value)?),
            ("flags", "hosts") => raw.flag_hosts = Some(parse_list(line_no, value)?),
            ("agent", "foothold") => raw.foothold = Some(parse_num(line_no, value)?),
            ("dynamics", "exploit_prob") => {
                raw.exploit_prob = Some(value.parse().map_err(|_| ScenarioError::Parse {
                    line: line_no,
                    message: format!("bad float '{value}'"),
                })?)
            }
            ("dynamics", "step_limit") => raw.step_limit = Some(parse_num(line_no, value)?),
            ("actions", "m") => raw.m = Some(parse_num(line_no, value)?),
            ("actions", "n") => raw.n = Some(parse_num(line_no, value)?),
            ("actions", "o") => raw.o = Some(parse_num(line_no, value)?),
            ("", _) => return parse_err(line_no, "key outside any section"),
            (sec, key) => return parse_err(line_no, &format!("unknown key '{key}' in [{sec}]")),
        }
    }

    let hosts = require(raw.hosts, "network.hosts")?;
    let subnets = require(raw.subnets, "network.subnets")?;
    let subnet_of = require(raw.subnet_of, "network.subnet_of")?;
    let pairs = require(raw.adjacency_pairs, "network.adjacency")?;
    let flag_hosts = require(raw.flag_hosts, "flags.hosts")?;
    let foothold = require(raw.foothold, "agent.foothold")?;

    let mut adjacency = vec![vec![false; subnets]; subnets];
    for (i, row) in adjacency.iter_mut().enumerate() {
        row[i] = true;
    }
    for (a, b) in pairs {
        if a >= subnets || b >= subnets {
            return Err(ScenarioError::Parse {
                line: 0,
                message: format!("adjacency pair {a}-{b} outside subnet range"),
            });
        }
        adjacency[a][b] = true;
        adjacency[b][a] = true;
    }

    let spec = ScenarioSpec {
        name: name.to_string(),
        hosts,
        subnets,
        subnet_of,
        adjacency,
        flag_hosts: BTreeSet::from_iter(flag_hosts),
        foothold,
        exploit_prob: raw.exploit_prob.unwrap_or(0.9),
        step_limit: raw.step_limit.unwrap_or(500),
        host_to_host_types: raw.m.unwrap_or(2),
        host_to_subnet_types: raw.n.unwrap_or(1),
        on_host_types: raw.o.unwrap_or(2),
        rewards: RewardScheme::default(),
    };
    spec.validate()?;
    Ok(spec)
}

fn parse_err<T>(line: usize, message: &str) -> Result<T, ScenarioError> {
    Err(ScenarioError::Parse {
        line,
        message: message.to_string(),
    })
}

fn require<T>(v: Option<T>, key: &str) -> Result<T, ScenarioError> {
    v.ok_or_else(|| ScenarioError::Parse {
        line: 0,
        message: format!("missing required key {key}"),
    })
}

fn parse_num(line: usize, value: &str) -> Result<usize, ScenarioError> {
    value.parse().map_err(|_| ScenarioError::Parse {
        line,
        message: format!("bad integer '{value}'"),
    })
}

fn parse_list(line: usize, value: &str) -> Result<Vec<usize>, ScenarioError> {
    if value.is_empty() {
        return Ok(Vec::new());
    }
    value.split(',').map(|v| parse_num(line, v.trim())).collect()
}

fn parse_pairs(line: usize, value: &str) -> Result<Vec<(usize, usize)>, ScenarioError> {
    if value.is_empty() {
        return Ok(Vec::new());
    }
    value
        .split(';')
        .map(|pair| {
            let pair = pair.trim();
            let Some((a, b)) = pair.split_once('-') else {
                return parse_err(line, &format!("bad adjacency pair '{pair}'"));
            };
            Ok((parse_num(line, a.trim())?, parse_num(line, b.trim())?))
        })
        .collect()
}
