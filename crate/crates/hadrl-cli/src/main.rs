//! Command-line entry point for reproducible experiments.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage error.

use std::path::PathBuf;

use clap::{value_parser, Args, Parser, Subcommand};

use hadrl_core::action_algebra::DecompositionPlan;
use hadrl_core::agents::{load_group, GroupConfig};
use hadrl_core::env::{
    oracle_optimal, resolve_scenario, PentestEnv, DEFAULT_STATE_BUDGET,
};
use hadrl_core::nn::OptimizerMode;
use hadrl_core::trainer::{
    compare_runs, dump_embeddings, evaluate, train, Algorithm, EpsilonSchedule, RunConfig,
};

#[derive(Parser)]
#[command(name = "hadrl", version, about = "Hierarchical-agent DQN laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the mixed-radix decomposition plan for a flat action space
    Plan {
        /// Size of the flat action space
        #[arg(long, value_parser = value_parser!(u64).range(1..))]
        actions: u64,
        /// Largest allowed per-level radix
        #[arg(long, default_value_t = 10, value_parser = value_parser!(u64).range(2..))]
        max_branch: u64,
    },
    /// List a scenario's full action catalog, one id per line
    Enumerate {
        #[arg(long)]
        scenario: String,
    },
    /// Shortest-capture oracle on the deterministic transition graph
    Oracle {
        #[arg(long)]
        scenario: String,
    },
    /// Train an agent group and write metrics plus a checkpoint
    Train(Box<TrainArgs>),
    /// Greedy evaluation of a saved checkpoint
    Eval {
        #[arg(long)]
        scenario: String,
        /// Checkpoint directory written by `train`
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, default_value_t = 10)]
        episodes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Compare convergence of two groups of completed runs
    Compare {
        /// Comma-separated run directories for side A
        #[arg(long, value_delimiter = ',')]
        a: Vec<PathBuf>,
        /// Comma-separated run directories for side B
        #[arg(long, value_delimiter = ',')]
        b: Vec<PathBuf>,
        /// Write the summary here as well as stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Dump trunk activations of visited states for external projection
    DumpEmbeddings {
        #[arg(long)]
        scenario: String,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, default_value_t = 1)]
        episodes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file; stdout when absent
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    scenario: String,
    #[arg(long, default_value = "hadrl", value_parser = parse_algorithm)]
    algo: Algorithm,
    #[arg(long, default_value_t = 1000)]
    episodes: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Run directory for metrics.csv, run.txt and checkpoint/
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 10, value_parser = value_parser!(u64).range(2..))]
    max_branch: u64,
    #[arg(long, default_value_t = 0.99)]
    gamma: f64,
    #[arg(long, default_value_t = 1e-4)]
    lr: f64,
    #[arg(long, default_value_t = 64)]
    batch: usize,
    #[arg(long, default_value_t = 100_000)]
    buffer: usize,
    /// Target-network sync period in updates
    #[arg(long, default_value_t = 1000)]
    sync_period: u64,
    /// Buffer size at which updates start
    #[arg(long, default_value_t = 1000)]
    train_start: usize,
    /// Environment steps between update rounds
    #[arg(long, default_value_t = 1)]
    train_every: usize,
    #[arg(long, default_value_t = 1.0)]
    eps_start: f64,
    #[arg(long, default_value_t = 0.05)]
    eps_end: f64,
    /// Fraction of episodes over which epsilon decays linearly
    #[arg(long, default_value_t = 0.2)]
    eps_decay_frac: f64,
    #[arg(long, default_value_t = 50)]
    eval_every: usize,
    #[arg(long, default_value_t = 10)]
    eval_episodes: usize,
    /// Comma-separated hidden trunk widths
    #[arg(long, default_value = "128,128", value_delimiter = ',')]
    arch: Vec<usize>,
    /// Extra hidden width on the value path (0 disables it)
    #[arg(long, default_value_t = 64)]
    value_hidden: usize,
    #[arg(long, default_value = "adam", value_parser = parse_optimizer)]
    optimizer: OptimizerMode,
    /// Bootstrap with the online argmax instead of the target max
    #[arg(long)]
    double_dqn: bool,
    /// Run per-level updates on scoped threads
    #[arg(long)]
    parallel: bool,
    /// Record real per-episode wall-clock (breaks byte-identical reruns)
    #[arg(long)]
    timing: bool,
}

fn parse_algorithm(s: &str) -> Result<Algorithm, String> {
    Algorithm::parse(s).ok_or_else(|| format!("unknown algorithm '{s}' (hadrl or ddqn)"))
}

fn parse_optimizer(s: &str) -> Result<OptimizerMode, String> {
    match s {
        "adam" => Ok(OptimizerMode::Adam),
        "sgd" => Ok(OptimizerMode::Sgd),
        _ => Err(format!("unknown optimizer '{s}' (adam or sgd)")),
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(message) = run(cli.command) {
        eprintln!("error: {message}");
        std::process::exit(1);
    }
}

fn run(command: Command) -> Result<(), String> {
    match command {
        Command::Plan {
            actions,
            max_branch,
        } => {
            let plan = DecompositionPlan::plan(actions as usize, max_branch as usize)
                .map_err(|e| e.to_string())?;
            let radices: Vec<String> = plan.radices().iter().map(|r| r.to_string()).collect();
            println!(
                "levels={} radices={} capacity={}",
                plan.levels(),
                radices.join(","),
                plan.capacity()
            );
            Ok(())
        }
        Command::Enumerate { scenario } => {
            let spec = resolve_scenario(&scenario).map_err(|e| e.to_string())?;
            use std::io::Write;
            let mut out = std::io::stdout().lock();
            for (id, action) in spec.action_catalog().iter().enumerate() {
                match writeln!(out, "{id}\t{action}") {
                    Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => return Ok(()),
                    Err(e) => return Err(e.to_string()),
                    Ok(()) => {}
                }
            }
            Ok(())
        }
        Command::Oracle { scenario } => {
            let spec = resolve_scenario(&scenario).map_err(|e| e.to_string())?;
            let result =
                oracle_optimal(&spec, DEFAULT_STATE_BUDGET).map_err(|e| e.to_string())?;
            println!(
                "min_steps={} max_return={:.1}",
                result.min_steps, result.max_return
            );
            Ok(())
        }
        Command::Train(args) => {
            let config = run_config_from(&args);
            let outcome = train(&config).map_err(|e| e.to_string())?;
            let plan = outcome.group.plan();
            let radices: Vec<String> = plan.radices().iter().map(|r| r.to_string()).collect();
            println!(
                "scenario={} algo={} actions={} levels={} radices={}",
                config.scenario,
                config.algorithm.name(),
                outcome.total_actions,
                plan.levels(),
                radices.join(",")
            );
            println!(
                "final_greedy_return={} final_greedy_steps={}",
                outcome.final_eval_return, outcome.final_eval_steps
            );
            Ok(())
        }
        Command::Eval {
            scenario,
            checkpoint,
            episodes,
            seed,
        } => {
            let spec = resolve_scenario(&scenario).map_err(|e| e.to_string())?;
            let mut env = PentestEnv::new(spec).map_err(|e| e.to_string())?;
            let group =
                load_group(&checkpoint, &GroupConfig::default()).map_err(|e| e.to_string())?;
            if group.plan().total_actions() != env.total_actions() {
                return Err(format!(
                    "checkpoint was trained on {} actions, scenario has {}",
                    group.plan().total_actions(),
                    env.total_actions()
                ));
            }
            let (ret, steps) = evaluate(&mut env, &group, episodes.max(1), seed);
            println!("eval_return={ret} eval_steps={steps}");
            Ok(())
        }
        Command::Compare { a, b, out } => {
            let summary = compare_runs(&a, &b).map_err(|e| e.to_string())?;
            let text = summary.to_string();
            print!("{text}");
            if let Some(path) = out {
                std::fs::write(&path, text).map_err(|e| e.to_string())?;
            }
            Ok(())
        }
        Command::DumpEmbeddings {
            scenario,
            checkpoint,
            episodes,
            seed,
            out,
        } => {
            let spec = resolve_scenario(&scenario).map_err(|e| e.to_string())?;
            let mut env = PentestEnv::new(spec).map_err(|e| e.to_string())?;
            let group =
                load_group(&checkpoint, &GroupConfig::default()).map_err(|e| e.to_string())?;
            match out {
                Some(path) => {
                    let file = std::fs::File::create(&path).map_err(|e| e.to_string())?;
                    let mut writer = std::io::BufWriter::new(file);
                    dump_embeddings(&group, &mut env, episodes, seed, &mut writer)
                        .map_err(|e| e.to_string())?;
                    use std::io::Write;
                    writer.flush().map_err(|e| e.to_string())?;
                }
                None => {
                    let mut stdout = std::io::stdout().lock();
                    dump_embeddings(&group, &mut env, episodes, seed, &mut stdout)
                        .map_err(|e| e.to_string())?;
                }
            }
            Ok(())
        }
    }
}

fn run_config_from(args: &TrainArgs) -> RunConfig {
    let mut config = RunConfig::new(&args.scenario, args.algo);
    config.max_branch = args.max_branch as usize;
    config.episodes = args.episodes;
    config.seed = args.seed;
    config.group = GroupConfig {
        gamma: args.gamma,
        lr: args.lr,
        sync_period: args.sync_period,
        optimizer: args.optimizer,
        double_dqn: args.double_dqn,
        trunk: args.arch.clone(),
        value_hidden: (args.value_hidden > 0).then_some(args.value_hidden),
    };
    config.batch_size = args.batch;
    config.buffer_capacity = args.buffer;
    config.train_start = args.train_start;
    config.train_every = args.train_every.max(1);
    config.epsilon = EpsilonSchedule {
        start: args.eps_start,
        end: args.eps_end,
        decay_fraction: args.eps_decay_frac,
    };
    config.eval_every = args.eval_every;
    config.eval_episodes = args.eval_episodes;
    config.out_dir = args.out.clone();
    config.parallel = args.parallel;
    config.record_walltime = args.timing;
    config
}
