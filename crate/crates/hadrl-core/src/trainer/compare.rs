//! Convergence comparison across completed runs: first episode whose
//! greedy evaluation reaches 90% of the oracle-optimal return, per seed,
//! summarized per algorithm.

use std::path::{Path, PathBuf};

use crate::env::{oracle_optimal, resolve_scenario, DEFAULT_STATE_BUDGET};

use super::metrics::{read_metrics, MetricsRecord};
use super::run::TrainError;

/// Threshold fraction of the oracle-optimal return.
pub const CROSSING_FRACTION: f64 = 0.9;

#[derive(Debug, Clone, PartialEq)]
pub struct AlgoSummary {
    pub algo: String,
    /// Per seed: first crossing episode, infinity when never crossed.
    pub crossings: Vec<(u64, f64)>,
    pub successes: usize,
    pub median_episodes: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonSummary {
    pub scenario: String,
    pub oracle_max_return: f64,
    pub threshold: f64,
    pub a: AlgoSummary,
    pub b: AlgoSummary,
}

impl std::fmt::Display for ComparisonSummary {
    /// Field order: scenario, oracle return, threshold, then one line per
    /// algorithm (label, seed count, successes, median), then the per-seed
    /// crossings.
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "scenario={}", self.scenario)?;
        writeln!(f, "oracle_max_return={}", self.oracle_max_return)?;
        writeln!(f, "threshold={}", self.threshold)?;
        for (label, side) in [("a", &self.a), ("b", &self.b)] {
            writeln!(
                f,
                "algo_{label}={} seeds={} successes={} median_episodes={}",
                side.algo,
                side.crossings.len(),
                side.successes,
                side.median_episodes
            )?;
        }
        for (label, side) in [("a", &self.a), ("b", &self.b)] {
            let per_seed: Vec<String> = side
                .crossings
                .iter()
                .map(|(seed, ep)| format!("{seed}:{ep}"))
                .collect();
            writeln!(f, "per_seed_{label}={}", per_seed.join(","))?;
        }
        Ok(())
    }
}

struct RunData {
    scenario: String,
    algo: String,
    seed: u64,
    records: Vec<MetricsRecord>,
}

fn read_run(dir: &Path) -> Result<RunData, TrainError> {
    let manifest_path = dir.join("run.txt");
    let text = std::fs::read_to_string(&manifest_path).map_err(|e| TrainError::BadRunData {
        path: manifest_path.display().to_string(),
        message: e.to_string(),
    })?;
    let field = |key: &str| -> Result<String, TrainError> {
        for line in text.lines() {
            if let Some((k, v)) = line.split_once('=') {
                if k.trim() == key {
                    return Ok(v.trim().to_string());
                }
            }
        }
        Err(TrainError::BadRunData {
            path: manifest_path.display().to_string(),
            message: format!("missing key {key}"),
        })
    };
    let seed: u64 = field("seed")?.parse().map_err(|e| TrainError::BadRunData {
        path: manifest_path.display().to_string(),
        message: format!("bad seed: {e}"),
    })?;
    let metrics_path = dir.join("metrics.csv");
    let records = read_metrics(&metrics_path).map_err(|message| TrainError::BadRunData {
        path: metrics_path.display().to_string(),
        message,
    })?;
    Ok(RunData {
        scenario: field("scenario")?,
        algo: field("algo")?,
        seed,
        records,
    })
}

/// First episode whose greedy evaluation return reaches the threshold.
fn first_crossing(records: &[MetricsRecord], threshold: f64) -> f64 {
    records
        .iter()
        .find(|r| r.eval_return.is_some_and(|v| v >= threshold))
        .map(|r| r.episode as f64)
        .unwrap_or(f64::INFINITY)
}

fn median(mut values: Vec<f64>) -> f64 {
    assert!(!values.is_empty());
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

fn summarize(runs: &[RunData], threshold: f64) -> AlgoSummary {
    let mut crossings: Vec<(u64, f64)> = runs
        .iter()
        .map(|r| (r.seed, first_crossing(&r.records, threshold)))
        .collect();
    crossings.sort_by_key(|&(seed, _)| seed);
    let successes = crossings.iter().filter(|(_, ep)| ep.is_finite()).count();
    let median_episodes = median(crossings.iter().map(|&(_, ep)| ep).collect());
    AlgoSummary {
        algo: runs.first().map(|r| r.algo.clone()).unwrap_or_default(),
        crossings,
        successes,
        median_episodes,
    }
}

/// Compares two groups of completed run directories (same scenario, same
/// seed set). Each directory holds `run.txt` and `metrics.csv` as written
/// by [`train`](super::train).
pub fn compare_runs(a_dirs: &[PathBuf], b_dirs: &[PathBuf]) -> Result<ComparisonSummary, TrainError> {
    if a_dirs.is_empty() || b_dirs.is_empty() {
        return Err(TrainError::SeedMismatch);
    }
    let a: Vec<RunData> = a_dirs.iter().map(|d| read_run(d)).collect::<Result<_, _>>()?;
    let b: Vec<RunData> = b_dirs.iter().map(|d| read_run(d)).collect::<Result<_, _>>()?;

    let scenario = a[0].scenario.clone();
    for run in a.iter().chain(&b) {
        if run.scenario != scenario {
            return Err(TrainError::ScenarioMismatch(
                scenario,
                run.scenario.clone(),
            ));
        }
    }
    let mut seeds_a: Vec<u64> = a.iter().map(|r| r.seed).collect();
    let mut seeds_b: Vec<u64> = b.iter().map(|r| r.seed).collect();
    seeds_a.sort_unstable();
    seeds_b.sort_unstable();
    if seeds_a != seeds_b {
        return Err(TrainError::SeedMismatch);
    }

    let spec = resolve_scenario(&scenario)?;
    let oracle = oracle_optimal(&spec, DEFAULT_STATE_BUDGET)?;
    let threshold = CROSSING_FRACTION * oracle.max_return;

    Ok(ComparisonSummary {
        scenario,
        oracle_max_return: oracle.max_return,
        threshold,
        a: summarize(&a, threshold),
        b: summarize(&b, threshold),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trainer::metrics::METRICS_HEADER;
    use tempfile::tempdir;

    fn write_run(
        dir: &Path,
        scenario: &str,
        algo: &str,
        seed: u64,
        crossings: &[(usize, f64)],
    ) {
        std::fs::create_dir_all(dir).unwrap();
        std::fs::write(
            dir.join("run.txt"),
            format!("scenario = {scenario}\nalgo = {algo}\nseed = {seed}\nepisodes = 100\nmax_branch = 10\n"),
        )
        .unwrap();
        let mut lines = vec![METRICS_HEADER.to_string()];
        for episode in 0..100 {
            let eval = crossings
                .iter()
                .find(|(e, _)| *e == episode)
                .map(|(_, v)| v.to_string())
                .unwrap_or_default();
            let eval_steps = if eval.is_empty() { "" } else { "3" };
            lines.push(format!("{episode},0,10,0.5,,{eval},{eval_steps},0,{seed}"));
        }
        std::fs::write(dir.join("metrics.csv"), lines.join("\n") + "\n").unwrap();
    }

    #[test]
    fn median_of_hand_built_crossings_is_20() {
        // tiny oracle max is 10.0 -> threshold 9.0.
        let root = tempdir().unwrap();
        let mut a_dirs = Vec::new();
        let mut b_dirs = Vec::new();
        for (i, cross) in [10usize, 20, 30].iter().enumerate() {
            let dir = root.path().join(format!("a{i}"));
            write_run(&dir, "tiny", "hadrl", i as u64, &[(*cross, 9.5)]);
            a_dirs.push(dir);
            let dir = root.path().join(format!("b{i}"));
            // b crosses later, one seed never.
            let b_cross: &[(usize, f64)] = if i == 2 { &[] } else { &[(cross + 50, 9.5)] };
            write_run(&dir, "tiny", "ddqn", i as u64, b_cross);
            b_dirs.push(dir);
        }
        let summary = compare_runs(&a_dirs, &b_dirs).unwrap();
        assert_eq!(summary.threshold, 9.0);
        assert_eq!(summary.a.median_episodes, 20.0);
        assert_eq!(summary.a.successes, 3);
        assert_eq!(summary.b.successes, 2);
        assert_eq!(summary.b.median_episodes, 70.0);
        assert_eq!(summary.b.crossings[2].1, f64::INFINITY);

        // The sentinel's magnitude never affects success counts.
        let text = summary.to_string();
        assert!(text.contains("per_seed_b=0:60,1:70,2:inf"));

        // Identical inputs give identical summaries.
        let again = compare_runs(&a_dirs, &b_dirs).unwrap();
        assert_eq!(summary, again);
    }

    #[test]
    fn mismatched_scenarios_are_rejected() {
        let root = tempdir().unwrap();
        let a = root.path().join("a");
        let b = root.path().join("b");
        write_run(&a, "tiny", "hadrl", 0, &[(1, 9.5)]);
        write_run(&b, "s6", "ddqn", 0, &[(1, 9.5)]);
        assert!(matches!(
            compare_runs(&[a], &[b]),
            Err(TrainError::ScenarioMismatch(_, _))
        ));
    }

    #[test]
    fn mismatched_seed_sets_are_rejected() {
        let root = tempdir().unwrap();
        let a = root.path().join("a");
        let b = root.path().join("b");
        write_run(&a, "tiny", "hadrl", 0, &[]);
        write_run(&b, "tiny", "ddqn", 1, &[]);
        assert!(matches!(
            compare_runs(&[a], &[b]),
            Err(TrainError::SeedMismatch)
        ));
    }
}
