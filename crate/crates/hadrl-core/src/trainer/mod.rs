//! Episode orchestration, evaluation sweeps, metrics, and run comparison.

mod compare;
mod embeddings;
mod metrics;
mod run;

pub use compare::{compare_runs, ComparisonSummary, CROSSING_FRACTION};
pub use embeddings::dump_embeddings;
pub use metrics::{read_metrics, write_metrics_header, MetricsRecord, METRICS_HEADER};
pub use run::{evaluate, train, Algorithm, EpsilonSchedule, RunConfig, TrainError, TrainOutcome};
