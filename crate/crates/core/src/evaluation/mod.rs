//! Metrics, per-topic accuracy, score densities and teacher experiments.

mod experiment;
mod kde;
mod metrics;
mod per_topic;
mod report;

pub use experiment::{
    run_experiment, ExperimentOptions, ExperimentResult, ExperimentRow, DEFAULT_FAILURE_THRESHOLD, REPORTED_ROWS,
};
pub use kde::{count_peaks, kde, silverman_bandwidth, KdeCurve, GRID_MARGIN, GRID_POINTS, MIN_BANDWIDTH, PEAK_FRACTION};
pub use metrics::{confusion, metrics, ConfusionMatrix, MetricsReport};
pub use per_topic::{per_topic_accuracy, PerTopicAccuracy, TopicAccuracy, TOPIC_ACCURACY_THRESHOLD};
pub use report::{format_table, write_report, EvalReport};

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("nothing to evaluate")]
    Empty,
    #[error("item {0} has no topic")]
    Unassigned(usize),
    #[error("need at least 2 scores, got {0}")]
    TooFewSamples(usize),
    #[error("score {0} is outside [0, 1]")]
    ScoreOutOfRange(f64),
    #[error("message {0} has no gold label")]
    MissingGold(String),
    #[error("validation set is unbalanced: {admin} admin vs {clinical} clinical")]
    Unbalanced { admin: usize, clinical: usize },
    #[error("teacher failure rate {rate:.4} exceeds {threshold}")]
    TooManyFailures { rate: f64, threshold: f64 },
    #[error("teacher: {0}")]
    Teacher(String),
    #[error("label cache: {0}")]
    Cache(std::io::Error),
    #[error(transparent)]
    Exemplars(#[from] crate::teacher::ExemplarError),
}
