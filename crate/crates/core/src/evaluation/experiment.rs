use serde::{Deserialize, Serialize};

use super::metrics::{confusion, metrics, ConfusionMatrix, MetricsReport};
use super::EvalError;
use crate::corpus::{Corpus, Label};
use crate::teacher::{
    label_batch, BatchError, ExemplarSet, LabelCache, LabelFailure, Preset, PromptKind, TeacherBackend, TeacherConfig,
    TeacherVerdict,
};

pub const DEFAULT_FAILURE_THRESHOLD: f64 = 0.01;

/// One row in the layout of the experiment results table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRow {
    pub experiment: String,
    pub teacher_model: String,
    pub prompt_kind: PromptKind,
    pub exemplars: usize,
    pub n_messages: usize,
    pub n_failures: usize,
    pub confusion: ConfusionMatrix,
    #[serde(flatten)]
    pub metrics: MetricsReport,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentResult {
    pub row: ExperimentRow,
    pub verdicts: Vec<TeacherVerdict>,
    pub failures: Vec<LabelFailure>,
}

/// Accuracy, sensitivity, specificity, precision and F1 reported for the
/// presets on the original, non-public message set.
pub const REPORTED_ROWS: [(Preset, [f64; 5]); 4] = [
    (Preset::E1, [0.89, 0.88, 0.91, 0.90, 0.89]),
    (Preset::E2, [0.99, 0.99, 1.0, 1.0, 0.99]),
    (Preset::E3, [0.85, 0.75, 0.96, 0.95, 0.84]),
    (Preset::E4, [0.65, 0.32, 0.98, 0.95, 0.48]),
];

#[derive(Clone, Debug)]
pub struct ExperimentOptions {
    /// Largest tolerated fraction of messages without a usable verdict.
    pub failure_threshold: f64,
    /// Seed for drawing the smaller presets' exemplar subsets.
    pub subset_seed: u64,
}

impl Default for ExperimentOptions {
    fn default() -> Self {
        Self {
            failure_threshold: DEFAULT_FAILURE_THRESHOLD,
            subset_seed: 0,
        }
    }
}

/// Labels the validation messages with the preset's prompt and teacher model
/// and scores the verdicts against the gold labels.
pub async fn run_experiment(
    preset: Preset,
    validation: &Corpus,
    full_exemplars: &ExemplarSet,
    backend: &dyn TeacherBackend,
    config: &TeacherConfig,
    cache: &LabelCache,
    options: &ExperimentOptions,
) -> Result<ExperimentResult, EvalError> {
    let mut counts = [0usize; 2];
    for m in validation {
        let gold = m.gold_label.ok_or_else(|| EvalError::MissingGold(m.id.clone()))?;
        counts[usize::from(gold.is_clinical())] += 1;
    }
    if validation.is_empty() {
        return Err(EvalError::Empty);
    }
    if counts[0].abs_diff(counts[1]) > 1 {
        return Err(EvalError::Unbalanced {
            admin: counts[0],
            clinical: counts[1],
        });
    }

    let spec = preset.prompt_spec(full_exemplars, options.subset_seed)?;
    let exemplars = spec.exemplars.as_ref().map_or(0, ExemplarSet::len);
    let config = TeacherConfig {
        model_id: preset.model_id().to_string(),
        ..config.clone()
    };
    let report = match label_batch(&validation.messages, &spec, backend, &config, cache).await {
        Ok(r) => r,
        Err(BatchError::Cache { source, .. }) => return Err(EvalError::Cache(source)),
        Err(e) => return Err(EvalError::Teacher(e.to_string())),
    };
    let failures: Vec<LabelFailure> = report.failures().cloned().collect();
    let rate = report.failure_rate();
    if rate > options.failure_threshold {
        return Err(EvalError::TooManyFailures {
            rate,
            threshold: options.failure_threshold,
        });
    }

    let mut preds = Vec::new();
    let mut golds = Vec::new();
    let mut verdicts = Vec::new();
    for (m, r) in validation.iter().zip(&report.results) {
        if let Ok(v) = r {
            preds.push(v.label);
            golds.push(m.gold_label.expect("checked above"));
            verdicts.push(v.clone());
        }
    }
    let matrix = confusion(&preds, &golds, Label::Clinical)?;
    Ok(ExperimentResult {
        row: ExperimentRow {
            experiment: preset.name().to_string(),
            teacher_model: config.model_id.clone(),
            prompt_kind: spec.kind,
            exemplars,
            n_messages: validation.len(),
            n_failures: failures.len(),
            confusion: matrix,
            metrics: metrics(&matrix)?,
        },
        verdicts,
        failures,
    })
}
