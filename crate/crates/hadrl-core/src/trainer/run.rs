//! The training loop: rollout, shared replay, per-level updates, periodic
//! greedy evaluation, continuous metrics emission, final checkpoint.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

use crate::action_algebra::{DecompositionPlan, PlanError};
use crate::agents::{
    save_group, AgentError, AgentGroup, GroupCheckpointError, GroupConfig, ReplayBuffer,
    Transition,
};
use crate::env::{EnvError, OracleError, PentestEnv, ScenarioError};
use crate::nn::NnError;
use crate::seeding::derive;

use super::metrics::{write_metrics_header, MetricsRecord};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Checkpoint(#[from] GroupCheckpointError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("runs compare different scenarios: '{0}' vs '{1}'")]
    ScenarioMismatch(String, String),
    #[error("seed sets differ between the two run groups")]
    SeedMismatch,
    #[error("{path}: {message}")]
    BadRunData { path: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    /// One learner per decomposition level.
    HaDrl,
    /// Single dueling-DQN baseline (a one-level group).
    Ddqn,
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::HaDrl => "hadrl",
            Algorithm::Ddqn => "ddqn",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "hadrl" => Some(Algorithm::HaDrl),
            "ddqn" => Some(Algorithm::Ddqn),
            _ => None,
        }
    }
}

/// Linear decay from `start` to `end` over the first `decay_fraction` of
/// the episode budget, constant afterwards.
#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonSchedule {
    pub start: f64,
    pub end: f64,
    pub decay_fraction: f64,
}

impl Default for EpsilonSchedule {
    fn default() -> Self {
        Self {
            start: 1.0,
            end: 0.05,
            decay_fraction: 0.2,
        }
    }
}

impl EpsilonSchedule {
    pub fn value(&self, episode: usize, total_episodes: usize) -> f64 {
        let horizon = ((total_episodes as f64 * self.decay_fraction).round() as usize).max(1);
        if episode >= horizon {
            return self.end;
        }
        let t = episode as f64 / horizon as f64;
        self.start + (self.end - self.start) * t
    }
}

/// Everything one reproducible run needs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: String,
    pub algorithm: Algorithm,
    pub max_branch: usize,
    pub episodes: usize,
    pub seed: u64,
    pub group: GroupConfig,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    /// Updates start once the buffer holds this many transitions.
    pub train_start: usize,
    /// One update round every this many environment steps.
    pub train_every: usize,
    pub epsilon: EpsilonSchedule,
    /// Greedy evaluation every this many episodes.
    pub eval_every: usize,
    pub eval_episodes: usize,
    pub out_dir: Option<PathBuf>,
    /// Run per-level updates on scoped threads.
    pub parallel: bool,
    /// Record real wall-clock per episode. Off by default so identical
    /// seeds produce byte-identical metrics files.
    pub record_walltime: bool,
}

impl RunConfig {
    pub fn new(scenario: &str, algorithm: Algorithm) -> Self {
        Self {
            scenario: scenario.to_string(),
            algorithm,
            max_branch: 10,
            episodes: 1000,
            seed: 0,
            group: GroupConfig::default(),
            batch_size: 64,
            buffer_capacity: 100_000,
            train_start: 1000,
            train_every: 1,
            epsilon: EpsilonSchedule::default(),
            eval_every: 50,
            eval_episodes: 10,
            out_dir: None,
            parallel: false,
            record_walltime: false,
        }
    }
}

#[derive(Debug)]
pub struct TrainOutcome {
    pub metrics: Vec<MetricsRecord>,
    pub group: AgentGroup,
    pub total_actions: usize,
    pub final_eval_return: f64,
    pub final_eval_steps: f64,
}

// Derived-seed streams, one per independent random consumer.
const STREAM_NETS: u64 = 0;
const STREAM_SELECT: u64 = 1;
const STREAM_SAMPLE: u64 = 2;
const STREAM_TRAIN_ENV: u64 = 3;
const STREAM_EVAL_ENV: u64 = 4;
const STREAM_FINAL_EVAL: u64 = 5;

/// Runs a full training job. Configuration and scenario errors surface
/// before the first episode; metrics append record by record.
pub fn train(config: &RunConfig) -> Result<TrainOutcome, TrainError> {
    let spec = crate::env::resolve_scenario(&config.scenario)?;
    let mut env = PentestEnv::new(spec.clone())?;
    let mut eval_env = PentestEnv::new(spec.clone())?;
    let total_actions = env.total_actions();

    let plan = match config.algorithm {
        Algorithm::HaDrl => DecompositionPlan::plan(total_actions, config.max_branch)?,
        Algorithm::Ddqn => DecompositionPlan::single_level(total_actions)?,
    };
    let mut group = AgentGroup::new(
        plan.clone(),
        env.observation_width(),
        &config.group,
        derive(config.seed, STREAM_NETS),
    )?;
    let mut buffer = ReplayBuffer::new(plan, config.buffer_capacity);
    let mut select_rng = ChaCha20Rng::seed_from_u64(derive(config.seed, STREAM_SELECT));
    let mut sample_rng = ChaCha20Rng::seed_from_u64(derive(config.seed, STREAM_SAMPLE));
    let train_env_base = derive(config.seed, STREAM_TRAIN_ENV);
    let eval_env_base = derive(config.seed, STREAM_EVAL_ENV);

    let mut metrics_file = match &config.out_dir {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            let mut file = BufWriter::new(File::create(dir.join("metrics.csv"))?);
            write_metrics_header(&mut file)?;
            file.flush()?;
            Some(file)
        }
        None => None,
    };

    let mut metrics = Vec::with_capacity(config.episodes);
    let mut global_step: usize = 0;
    let mut eval_round: u64 = 0;

    for episode in 0..config.episodes {
        let started = Instant::now();
        let eps = config.epsilon.value(episode, config.episodes);
        group.set_epsilon(eps);

        let mut obs = env.reset(derive(train_env_base, episode as u64));
        let mut episode_return = 0.0;
        let mut episode_steps = 0usize;
        let mut loss_sum = 0.0;
        let mut loss_count = 0usize;

        while !env.is_terminal() {
            let (digits, composed) = group.select_joint(&obs, eps, &mut select_rng);
            let (next_obs, reward, terminal, _) = env.step(composed)?;
            buffer.push(Transition {
                state: obs,
                primitive_actions: digits,
                composed_action: composed,
                reward,
                next_state: next_obs.clone(),
                terminal,
            })?;
            obs = next_obs;
            episode_return += reward;
            episode_steps += 1;
            global_step += 1;

            if buffer.len() >= config.train_start.max(config.batch_size)
                && global_step % config.train_every == 0
            {
                let batch = buffer
                    .sample_batch(config.batch_size, &mut sample_rng)
                    .expect("buffer size checked above");
                for loss in group.update_all(&batch, config.parallel)? {
                    loss_sum += loss;
                    loss_count += 1;
                }
            }
        }

        let (eval_return, eval_steps) = if (episode + 1) % config.eval_every.max(1) == 0 {
            eval_round += 1;
            let (r, s) = evaluate(
                &mut eval_env,
                &group,
                config.eval_episodes,
                derive(eval_env_base, eval_round),
            );
            (Some(r), Some(s))
        } else {
            (None, None)
        };

        let record = MetricsRecord {
            episode,
            train_return: episode_return,
            steps: episode_steps,
            epsilon: eps,
            loss_mean: (loss_count > 0).then(|| loss_sum / loss_count as f64),
            eval_return,
            eval_steps,
            wall_ms: if config.record_walltime {
                started.elapsed().as_millis() as u64
            } else {
                0
            },
            seed: config.seed,
        };
        if let Some(file) = metrics_file.as_mut() {
            writeln!(file, "{}", record.to_csv_line())?;
            file.flush()?;
        }
        metrics.push(record);
    }

    let (final_eval_return, final_eval_steps) = evaluate(
        &mut eval_env,
        &group,
        config.eval_episodes.max(1),
        derive(config.seed, STREAM_FINAL_EVAL),
    );

    if let Some(dir) = &config.out_dir {
        save_group(&group, &dir.join("checkpoint"))?;
        let run_manifest = format!(
            "scenario = {}\nalgo = {}\nseed = {}\nepisodes = {}\nmax_branch = {}\n",
            spec.name,
            config.algorithm.name(),
            config.seed,
            config.episodes,
            config.max_branch,
        );
        std::fs::write(dir.join("run.txt"), run_manifest)?;
    }

    Ok(TrainOutcome {
        metrics,
        group,
        total_actions,
        final_eval_return,
        final_eval_steps,
    })
}

/// Mean greedy return and steps over `episodes` rollouts. Touches nothing
/// observable: no buffer writes, no parameter updates, no epsilon change.
pub fn evaluate(
    env: &mut PentestEnv,
    group: &AgentGroup,
    episodes: usize,
    seed: u64,
) -> (f64, f64) {
    let mut rng = ChaCha20Rng::seed_from_u64(derive(seed, 0));
    let mut total_return = 0.0;
    let mut total_steps = 0usize;
    for episode in 0..episodes {
        let mut obs = env.reset(derive(seed, episode as u64 + 1));
        while !env.is_terminal() {
            let (_, composed) = group.select_joint(&obs, 0.0, &mut rng);
            let (next_obs, reward, _, _) = env.step(composed).expect("non-terminal loop");
            obs = next_obs;
            total_return += reward;
            total_steps += 1;
        }
    }
    (
        total_return / episodes as f64,
        total_steps as f64 / episodes as f64,
    )
}
