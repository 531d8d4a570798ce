//! The whole distillation flow on a synthetic corpus, in memory: generate,
//! ingest, group, cluster, sample exemplars, label with the mock teacher,
//! split, train the student and evaluate it against gold labels.

use std::collections::HashMap;
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::corpus::{self, Corpus, DatasetSplit, Label, SynthConfig};
use crate::evaluation::{self, EvalReport};
use crate::student::{self, Example, FeatureConfig, StudentModel, TrainConfig, TrainReport};
use crate::teacher::{self, ExemplarSet, LabelCache, MockBackend, PromptSpec, TeacherConfig};
use crate::topics::{self, TopicModel, TopicParams};
use crate::weak_labeler::{census, GroupCensus};

#[derive(Clone, Debug)]
pub struct PipelineConfig {
    pub synth: SynthConfig,
    pub teacher_noise: f64,
    pub exemplar_budget: usize,
    pub topic_k: usize,
    pub ratios: [f64; 3],
    pub train: TrainConfig,
    pub features: FeatureConfig,
    pub max_parallel_requests: usize,
}

impl PipelineConfig {
    /// 2,000 balanced messages with 20% shared vocabulary, a 20-exemplar
    /// few-shot prompt and an 80/10/10 split. Every stage is seeded by `seed`.
    pub fn standard(seed: u64, teacher_noise: f64) -> Self {
        Self {
            synth: SynthConfig::new(2000, seed),
            teacher_noise,
            exemplar_budget: 20,
            topic_k: 8,
            ratios: [0.8, 0.1, 0.1],
            train: TrainConfig {
                seed,
                ..TrainConfig::default()
            },
            features: FeatureConfig::default(),
            max_parallel_requests: 8,
        }
    }

    fn seed(&self) -> u64 {
        self.synth.seed
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Synth(#[from] corpus::SynthError),
    #[error(transparent)]
    Ingest(#[from] corpus::IngestError),
    #[error("{0} records rejected on ingest")]
    Rejected(usize),
    #[error(transparent)]
    Topics(#[from] topics::TopicsError),
    #[error(transparent)]
    Exemplars(#[from] teacher::ExemplarError),
    #[error(transparent)]
    Labeling(#[from] teacher::BatchError),
    #[error(transparent)]
    Split(#[from] corpus::SplitError),
    #[error(transparent)]
    Student(#[from] student::StudentError),
    #[error(transparent)]
    Eval(#[from] evaluation::EvalError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct StageTimes {
    pub stages: Vec<(String, Duration)>,
}

impl StageTimes {
    fn record(&mut self, name: &str, since: Instant) {
        self.stages.push((name.to_string(), since.elapsed()));
    }

    pub fn total(&self) -> Duration {
        self.stages.iter().map(|s| s.1).sum()
    }
}

#[derive(Debug)]
pub struct PipelineOutput {
    pub corpus: Corpus,
    pub census: GroupCensus,
    pub topics: TopicModel,
    pub exemplars: ExemplarSet,
    pub teacher_labels: HashMap<String, Label>,
    pub labeling_failures: usize,
    pub split: DatasetSplit,
    pub model: StudentModel,
    pub train_report: TrainReport,
    pub report: EvalReport,
    pub model_bytes: Vec<u8>,
    pub report_bytes: Vec<u8>,
    pub times: StageTimes,
}

impl PipelineOutput {
    pub fn test_accuracy(&self) -> f64 {
        self.report.metrics.accuracy
    }
}

fn examples(corpus: &Corpus, ids: &[String], labels: &HashMap<String, Label>) -> Vec<Example> {
    ids.iter()
        .map(|id| {
            let m = corpus.get(id).expect("split ids come from the corpus");
            Example {
                id: id.clone(),
                text: m.text(),
                label: labels[id],
            }
        })
        .collect()
}

pub async fn run_pipeline(config: &PipelineConfig) -> Result<PipelineOutput, PipelineError> {
    let seed = config.seed();
    let mut times = StageTimes::default();

    let t = Instant::now();
    let generated = corpus::generate_synthetic(&config.synth)?;
    let mut jsonl = Vec::new();
    corpus::write_corpus(&mut jsonl, &generated)?;
    let ingested = corpus::ingest(jsonl.as_slice(), "synthetic")?;
    if !ingested.rejects.is_empty() {
        return Err(PipelineError::Rejected(ingested.rejects.len()));
    }
    let corpus = ingested.corpus;
    let groups = census(&corpus);
    times.record("ingest", t);

    let t = Instant::now();
    let topic_model = topics::discover_topics(&corpus, &TopicParams::with_k(config.topic_k), seed)?;
    let exemplars = teacher::sample_exemplars(&corpus, &topic_model, config.exemplar_budget, seed)?;
    times.record("topics", t);

    let t = Instant::now();
    let backend = MockBackend::new(config.teacher_noise, seed);
    let teacher_config = TeacherConfig {
        max_parallel_requests: config.max_parallel_requests,
        ..TeacherConfig::default()
    };
    let batch = teacher::label_batch(
        &corpus.messages,
        &PromptSpec::few_shot(exemplars.clone()),
        &backend,
        &teacher_config,
        &LabelCache::in_memory(),
    )
    .await?;
    let teacher_labels: HashMap<String, Label> = batch.verdicts().map(|v| (v.message_id.clone(), v.label)).collect();
    let labeling_failures = batch.failures().count();
    times.record("label", t);

    let t = Instant::now();
    let labeled_ids: Vec<String> = corpus
        .iter()
        .filter(|m| teacher_labels.contains_key(&m.id))
        .map(|m| m.id.clone())
        .collect();
    let labeled = corpus.select(&labeled_ids);
    let split = corpus::split(&labeled, |m| teacher_labels.get(&m.id).copied(), config.ratios, seed)?;
    let train_set = examples(&corpus, &split.train, &teacher_labels);
    let val_set = examples(&corpus, &split.val, &teacher_labels);
    let (model, train_report) = student::train(&train_set, &val_set, &config.train, &config.features)?;
    let model_bytes = student::model_to_bytes(&model)?;
    times.record("train", t);

    let t = Instant::now();
    let test = corpus.select(&split.test);
    let scores: Vec<f64> = test.iter().map(|m| model.predict_score(&m.text())).collect();
    let preds: Vec<Label> = scores.iter().map(|&s| student::label_for_score(s)).collect();
    let golds: Vec<Label> = test
        .iter()
        .map(|m| m.gold_label.ok_or_else(|| evaluation::EvalError::MissingGold(m.id.clone())))
        .collect::<Result<_, _>>()?;
    let topic_of = topic_model.assignment_map();
    let test_topics: Vec<Option<usize>> = test.iter().map(|m| topic_of.get(m.id.as_str()).copied()).collect();
    let matrix = evaluation::confusion(&preds, &golds, Label::Clinical)?;
    let report = EvalReport {
        name: "student".to_string(),
        n_messages: test.len(),
        confusion: matrix,
        metrics: evaluation::metrics(&matrix)?,
        per_topic: Some(evaluation::per_topic_accuracy(&preds, &golds, &test_topics)?),
        kde: Some(evaluation::kde(&scores)?),
    };
    let mut report_bytes = Vec::new();
    evaluation::write_report(&mut report_bytes, &report)?;
    times.record("evaluate", t);

    Ok(PipelineOutput {
        corpus,
        census: groups,
        topics: topic_model,
        exemplars,
        teacher_labels,
        labeling_failures,
        split,
        model,
        train_report,
        report,
        model_bytes,
        report_bytes,
        times,
    })
}
