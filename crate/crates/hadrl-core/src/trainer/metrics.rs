//! Per-episode training statistics, written as comma-separated text with
//! a fixed header. Appended record by record so interrupted runs stay
//! inspectable.

pub const METRICS_HEADER: &str =
    "episode,return,steps,epsilon,loss_mean,eval_return,eval_steps,wall_ms,seed";

/// One row of the run log. `loss_mean` is empty before updates start;
/// the eval fields are empty on non-evaluation episodes.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRecord {
    pub episode: usize,
    pub train_return: f64,
    pub steps: usize,
    pub epsilon: f64,
    pub loss_mean: Option<f64>,
    pub eval_return: Option<f64>,
    pub eval_steps: Option<f64>,
    pub wall_ms: u64,
    pub seed: u64,
}

impl MetricsRecord {
    pub fn to_csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.episode,
            self.train_return,
            self.steps,
            self.epsilon,
            opt(self.loss_mean),
            opt(self.eval_return),
            opt(self.eval_steps),
            self.wall_ms,
            self.seed
        )
    }

    pub fn from_csv_line(line: &str) -> Result<Self, String> {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 9 {
            return Err(format!("expected 9 fields, got {}", fields.len()));
        }
        Ok(Self {
            episode: parse(fields[0], "episode")?,
            train_return: parse(fields[1], "return")?,
            steps: parse(fields[2], "steps")?,
            epsilon: parse(fields[3], "epsilon")?,
            loss_mean: parse_opt(fields[4], "loss_mean")?,
            eval_return: parse_opt(fields[5], "eval_return")?,
            eval_steps: parse_opt(fields[6], "eval_steps")?,
            wall_ms: parse(fields[7], "wall_ms")?,
            seed: parse(fields[8], "seed")?,
        })
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn parse<T: std::str::FromStr>(field: &str, name: &str) -> Result<T, String>
where
    T::Err: std::fmt::Display,
{
    field
        .parse()
        .map_err(|e| format!("bad {name} '{field}': {e}"))
}

fn parse_opt(field: &str, name: &str) -> Result<Option<f64>, String> {
    if field.is_empty() {
        Ok(None)
    } else {
        parse(field, name).map(Some)
    }
}

pub fn write_metrics_header(out: &mut impl std::io::Write) -> std::io::Result<()> {
    writeln!(out, "{METRICS_HEADER}")
}

/// Reads a whole metrics file (header plus records).
pub fn read_metrics(path: &std::path::Path) -> Result<Vec<MetricsRecord>, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == METRICS_HEADER => {}
        other => return Err(format!("bad metrics header {other:?}")),
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            MetricsRecord::from_csv_line(line).map_err(|e| format!("line {}: {e}", i + 2))
        })
        .collect()
}
