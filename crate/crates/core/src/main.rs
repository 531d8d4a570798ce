use std::collections::HashMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use optic::corpus::{self, Corpus, Label, SynthConfig};
use optic::evaluation::{self, EvalReport, ExperimentOptions};
use optic::pipeline::{run_pipeline, PipelineConfig};
use optic::service::{self, ReviewStore};
use optic::student::{self, Example, FeatureConfig, TrainConfig};
use optic::teacher::{
    self, ExemplarSet, HttpTeacher, LabelCache, MockBackend, Preset, PromptKind, PromptSpec, TeacherBackend,
    TeacherConfig, TeacherVerdict,
};
use optic::topics::{self, KChoice, Linkage, TopicParams};
use optic::weak_labeler;

#[derive(Parser)]
#[command(name = "optic", version, about = "Patient message triage: teacher labeling, student training, evaluation and serving")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a JSONL message export and write the accepted records
    Ingest {
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Keep only the earliest message of each encounter
        #[arg(long)]
        first_per_encounter: bool,
    },
    /// Generate a labeled synthetic corpus
    Synth {
        #[arg(long, default_value_t = 2000)]
        n: usize,
        /// Fraction of Clinical messages
        #[arg(long, default_value_t = 0.5)]
        balance: f64,
        #[arg(long, default_value_t = 0.2)]
        overlap: f64,
        #[arg(long, default_value_t = 4)]
        templates: usize,
        #[arg(long, default_value_t = 1.0)]
        consistency: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Stratified train/validation/test split
    Split {
        corpus: PathBuf,
        #[arg(long, default_value = "0.8,0.1,0.1")]
        ratios: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Stratify on teacher verdicts instead of gold labels
        #[arg(long)]
        labels: Option<PathBuf>,
        /// Split description (ids per part) as JSON
        #[arg(long)]
        out: PathBuf,
        /// Also write train.jsonl, val.jsonl and test.jsonl into this directory
        #[arg(long)]
        materialize: Option<PathBuf>,
    },
    /// Assign metadata-based weak groups and print the census
    Weaklabel {
        corpus: PathBuf,
        /// Write each record with its weak_group
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cluster messages into topics
    Topics(TopicsArgs),
    /// Draw a few-shot exemplar set across topics
    SampleExemplars {
        corpus: PathBuf,
        #[arg(long)]
        topics: PathBuf,
        #[arg(long, default_value_t = 200)]
        budget: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Label messages with the teacher model
    Label(LabelArgs),
    /// Train the student classifier
    Train(TrainArgs),
    /// Score messages with a trained student
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate a student against gold labels
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        test: PathBuf,
        #[arg(long)]
        topics: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run teacher prompt experiments on a validation set
    Experiment(ExperimentArgs),
    /// Serve classification and review over HTTP
    Serve {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        review_store: PathBuf,
        #[arg(long, default_value = "127.0.0.1:8080")]
        bind: String,
    },
    /// Load teacher verdicts into a review store
    ReviewLoad {
        verdicts: PathBuf,
        /// Corpus holding the message texts
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        store: PathBuf,
    },
    /// Export adjudicated labels from a review store
    ReviewExport {
        #[arg(long)]
        store: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Write the ids of tied items here
        #[arg(long)]
        ties: Option<PathBuf>,
    },
    /// Run the full synthetic distillation flow and write its artifacts
    Pipeline {
        #[arg(long, default_value_t = 2000)]
        n: usize,
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

#[derive(Args)]
struct TopicsArgs {
    corpus: PathBuf,
    /// Number of topics, or "auto" to pick by silhouette
    #[arg(long, default_value = "auto")]
    k: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10)]
    n_init: usize,
    #[arg(long)]
    out: PathBuf,
    /// Also write an agglomerative dendrogram of a sample as JSON
    #[arg(long)]
    dendrogram: Option<PathBuf>,
    #[arg(long, default_value = "average")]
    linkage: Linkage,
    #[arg(long, default_value_t = 2000)]
    sample: usize,
}

#[derive(Args)]
struct TeacherArgs {
    /// Use the deterministic mock teacher (needs gold labels)
    #[arg(long)]
    mock: bool,
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Overrides OPTIC_TEACHER_BASE_URL
    #[arg(long)]
    base_url: Option<String>,
    #[arg(long, default_value_t = 8)]
    max_parallel: usize,
    #[arg(long, default_value_t = 3)]
    max_retries: u32,
    #[arg(long, default_value_t = 60)]
    timeout_secs: u64,
}

impl TeacherArgs {
    fn config(&self, model: &str) -> TeacherConfig {
        let mut c = TeacherConfig::from_env(model);
        if let Some(url) = &self.base_url {
            c.base_url = url.clone();
        }
        c.max_parallel_requests = self.max_parallel;
        c.max_retries = self.max_retries;
        c.timeout = std::time::Duration::from_secs(self.timeout_secs);
        c
    }

    fn backend(&self, config: &TeacherConfig) -> Result<Box<dyn TeacherBackend>> {
        if self.mock {
            Ok(Box::new(MockBackend::new(self.noise, self.seed)))
        } else {
            Ok(Box::new(HttpTeacher::new(config)?))
        }
    }
}

#[derive(Args)]
struct LabelArgs {
    corpus: PathBuf,
    #[arg(long, default_value = "few")]
    prompt: PromptKind,
    #[arg(long)]
    exemplars: Option<PathBuf>,
    #[arg(long, default_value = "gpt-4-32k")]
    model: String,
    /// Verdict file; also used as the cache, so reruns only label new messages
    #[arg(long)]
    out: PathBuf,
    /// Write unlabeled messages (parse or transport failures) here
    #[arg(long)]
    failures: Option<PathBuf>,
    #[command(flatten)]
    teacher: TeacherArgs,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    val: Option<PathBuf>,
    /// Teacher verdicts to train on; gold labels are used when absent
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.1)]
    lr: f64,
    #[arg(long, default_value_t = 5)]
    epochs: usize,
    #[arg(long, default_value_t = 64)]
    batch_size: usize,
    #[arg(long, default_value_t = 1e-4)]
    l2: f64,
    /// log2 of the hashed feature dimension
    #[arg(long, default_value_t = 18)]
    hash_bits: u32,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ExperimentArgs {
    /// E1, E2, E3 or E4; all four when omitted
    #[arg(long)]
    preset: Option<Preset>,
    /// Gold-labeled validation corpus
    #[arg(long)]
    validation: PathBuf,
    /// Full (E2-sized) exemplar set
    #[arg(long)]
    exemplars: Option<PathBuf>,
    #[arg(long, default_value_t = evaluation::DEFAULT_FAILURE_THRESHOLD)]
    failure_threshold: f64,
    /// Verdict cache shared across runs
    #[arg(long)]
    cache: Option<PathBuf>,
    /// Write rows and verdicts as JSON lines
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    teacher: TeacherArgs,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn load(path: &Path) -> Result<Corpus> {
    corpus::load_corpus(path).with_context(|| format!("loading {}", path.display()))
}

fn write_json_line<W: Write, T: serde::Serialize>(w: &mut W, value: &T) -> Result<()> {
    serde_json::to_writer(&mut *w, value)?;
    w.write_all(b"\n")?;
    Ok(())
}

/// Teacher label per message id. Conflicting verdicts for one id are an error.
fn verdict_labels(path: &Path) -> Result<HashMap<String, Label>> {
    let mut labels = HashMap::new();
    for v in teacher::read_verdicts(path).with_context(|| format!("reading {}", path.display()))? {
        if let Some(prev) = labels.insert(v.message_id.clone(), v.label) {
            if prev != v.label {
                bail!("conflicting verdicts for {} in {}", v.message_id, path.display());
            }
        }
    }
    Ok(labels)
}

fn examples(corpus: &Corpus, labels: Option<&HashMap<String, Label>>) -> Result<Vec<Example>> {
    corpus
        .iter()
        .filter_map(|m| {
            let label = match labels {
                Some(l) => l.get(&m.id).copied(),
                None => m.gold_label,
            };
            // messages without a teacher verdict are skipped, missing gold is fatal
            match (label, labels.is_some()) {
                (Some(label), _) => Some(Ok(Example {
                    id: m.id.clone(),
                    text: m.text(),
                    label,
                })),
                (None, true) => None,
                (None, false) => Some(Err(anyhow::anyhow!("message {} has no gold label", m.id))),
            }
        })
        .collect()
}

fn prompt_spec(kind: PromptKind, exemplars: Option<&Path>) -> Result<PromptSpec> {
    Ok(match (kind, exemplars) {
        (PromptKind::ZeroShot, None) => PromptSpec::zero_shot(),
        (PromptKind::ZeroShot, Some(_)) => bail!("--exemplars is only used with --prompt few"),
        (PromptKind::FewShot, Some(p)) => PromptSpec::few_shot(ExemplarSet::load(p)?),
        (PromptKind::FewShot, None) => bail!("--prompt few needs --exemplars"),
    })
}

async fn label(args: LabelArgs) -> Result<()> {
    let corpus = load(&args.corpus)?;
    let spec = prompt_spec(args.prompt, args.exemplars.as_deref())?;
    let config = args.teacher.config(&args.model);
    let backend = args.teacher.backend(&config)?;
    let cache = LabelCache::open(&args.out).with_context(|| format!("opening {}", args.out.display()))?;
    let report = teacher::label_batch(&corpus.messages, &spec, backend.as_ref(), &config, &cache).await?;
    let failures: Vec<_> = report.failures().collect();
    if let Some(path) = &args.failures {
        let mut w = create(path)?;
        for f in &failures {
            write_json_line(&mut w, f)?;
        }
        w.flush()?;
    }
    eprintln!(
        "labeled {} of {} messages ({} requests, {} cached, {} failed)",
        report.verdicts().count(),
        corpus.len(),
        report.requests,
        report.cache_hits,
        failures.len()
    );
    Ok(())
}

fn train(args: TrainArgs) -> Result<()> {
    let labels = args.labels.as_deref().map(verdict_labels).transpose()?;
    let train_set = examples(&load(&args.train)?, labels.as_ref())?;
    let val_set = match &args.val {
        Some(p) => examples(&load(p)?, labels.as_ref())?,
        None => Vec::new(),
    };
    if args.hash_bits == 0 || args.hash_bits > 30 {
        bail!("--hash-bits must be in 1..=30");
    }
    let config = TrainConfig {
        learning_rate: args.lr,
        epochs: args.epochs,
        batch_size: args.batch_size,
        l2_penalty: args.l2,
        seed: args.seed,
        shuffle_each_epoch: true,
    };
    let features = FeatureConfig {
        hash_dim: 1 << args.hash_bits,
        ..FeatureConfig::default()
    };
    let (model, report) = student::train(&train_set, &val_set, &config, &features)?;
    student::save_model(&model, &args.out)?;
    println!(
        "{}",
        json!({
            "model": args.out,
            "model_version": model.model_version(),
            "train_examples": train_set.len(),
            "epoch_losses": report.epoch_losses,
            "validation_accuracy": report.validation_accuracy,
            "wall_time_ms": report.wall_time.as_secs_f64() * 1e3,
        })
    );
    Ok(())
}

fn eval(model: &Path, test: &Path, topics_path: Option<&Path>, out: &Path) -> Result<()> {
    let model = student::load_model(model)?;
    let test = load(test)?;
    let scores: Vec<f64> = test.iter().map(|m| model.predict_score(&m.text())).collect();
    let preds: Vec<Label> = scores.iter().map(|&s| student::label_for_score(s)).collect();
    let golds: Vec<Label> = test
        .iter()
        .map(|m| m.gold_label.with_context(|| format!("message {} has no gold label", m.id)))
        .collect::<Result<_>>()?;
    let matrix = evaluation::confusion(&preds, &golds, Label::Clinical)?;
    let per_topic = match topics_path {
        Some(p) => {
            let tm = topics::load_topic_model(p)?;
            let map = tm.assignment_map();
            let assigned: Vec<Option<usize>> = test.iter().map(|m| map.get(m.id.as_str()).copied()).collect();
            Some(evaluation::per_topic_accuracy(&preds, &golds, &assigned)?)
        }
        None => None,
    };
    let kde = if scores.len() >= 2 { Some(evaluation::kde(&scores)?) } else { None };
    let report = EvalReport {
        name: "student".into(),
        n_messages: test.len(),
        confusion: matrix,
        metrics: evaluation::metrics(&matrix)?,
        per_topic,
        kde,
    };
    let mut w = create(out)?;
    evaluation::write_report(&mut w, &report)?;
    w.flush()?;
    print!("{}", evaluation::format_table([("student", &report.metrics)]));
    Ok(())
}

async fn experiment(args: ExperimentArgs) -> Result<()> {
    let validation = load(&args.validation)?;
    let presets = match args.preset {
        Some(p) => vec![p],
        None => Preset::ALL.to_vec(),
    };
    let full = match &args.exemplars {
        Some(p) => ExemplarSet::load(p)?,
        None if presets.iter().all(|p| p.exemplar_count().is_none()) => ExemplarSet::new(vec![], vec![], 0),
        None => bail!("few-shot presets need --exemplars"),
    };
    let cache = match &args.cache {
        Some(p) => LabelCache::open(p)?,
        None => LabelCache::in_memory(),
    };
    let options = ExperimentOptions {
        failure_threshold: args.failure_threshold,
        subset_seed: args.teacher.seed,
    };
    let mut out = args.out.as_deref().map(create).transpose()?;
    let mut rows = Vec::new();
    for preset in presets {
        let config = args.teacher.config(preset.model_id());
        let backend = args.teacher.backend(&config)?;
        let result =
            evaluation::run_experiment(preset, &validation, &full, backend.as_ref(), &config, &cache, &options)
                .await
                .with_context(|| format!("experiment {preset}"))?;
        if let Some(w) = out.as_mut() {
            write_json_line(w, &json!({"record": "experiment", "row": &result.row}))?;
            for v in &result.verdicts {
                write_json_line(w, &json!({"record": "verdict", "experiment": preset.name(), "verdict": v}))?;
            }
            for f in &result.failures {
                write_json_line(w, &json!({"record": "failure", "experiment": preset.name(), "failure": f}))?;
            }
        }
        rows.push(result.row);
    }
    if let Some(mut w) = out {
        w.flush()?;
    }
    print!("{}", evaluation::format_table(rows.iter().map(|r| (r.experiment.as_str(), &r.metrics))));
    Ok(())
}

fn topics_cmd(args: TopicsArgs) -> Result<()> {
    let corpus = load(&args.corpus)?;
    let k = if args.k.eq_ignore_ascii_case("auto") {
        KChoice::auto()
    } else {
        KChoice::Fixed(args.k.parse().context("--k must be a number or \"auto\"")?)
    };
    let params = TopicParams {
        k,
        n_init: args.n_init,
        ..TopicParams::default()
    };
    let model = topics::discover_topics(&corpus, &params, args.seed)?;
    topics::save_topic_model(&args.out, &model)?;
    for (t, (size, terms)) in model.sizes().iter().zip(&model.top_terms).enumerate() {
        let words: Vec<&str> = terms.iter().take(5).map(|(w, _)| w.as_str()).collect();
        println!("topic {t:>3}  {size:>6}  {}", words.join(" "));
    }
    if let Some(path) = &args.dendrogram {
        let n = corpus.len().min(args.sample);
        let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
        let mut picked = sample(&mut rng, corpus.len(), n).into_vec();
        picked.sort_unstable();
        let docs: Vec<String> = picked.iter().map(|&i| corpus.messages[i].text()).collect();
        let emb = topics::tfidf_embed(&docs, 1)?;
        let tree = topics::hierarchical_cluster(&emb.rows, args.linkage, topics::DEFAULT_ITEM_CAP)?;
        let ids: Vec<&str> = picked.iter().map(|&i| corpus.messages[i].id.as_str()).collect();
        let mut w = create(path)?;
        serde_json::to_writer_pretty(&mut w, &json!({"ids": ids, "dendrogram": tree}))?;
        w.write_all(b"\n")?;
        w.flush()?;
    }
    Ok(())
}

fn split_cmd(
    corpus_path: &Path,
    ratios: &str,
    seed: u64,
    labels: Option<&Path>,
    out: &Path,
    materialize: Option<&Path>,
) -> Result<()> {
    let corpus = load(corpus_path)?;
    let ratios = corpus::parse_ratios(ratios)?;
    let labels = labels.map(verdict_labels).transpose()?;
    let split = match &labels {
        Some(l) => corpus::split(&corpus, |m| l.get(&m.id).copied(), ratios, seed)?,
        None => corpus::split(&corpus, |m| m.gold_label, ratios, seed)?,
    };
    let mut w = create(out)?;
    serde_json::to_writer_pretty(&mut w, &split)?;
    w.write_all(b"\n")?;
    w.flush()?;
    if let Some(dir) = materialize {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        for (name, ids) in ["train", "val", "test"].iter().zip(split.parts()) {
            corpus::save_corpus(&dir.join(format!("{name}.jsonl")), &corpus.select(ids))?;
        }
    }
    println!("train {}  val {}  test {}", split.train.len(), split.val.len(), split.test.len());
    Ok(())
}

fn review_load(verdicts: &Path, corpus_path: &Path, store_path: &Path) -> Result<()> {
    let corpus = load(corpus_path)?;
    let verdicts: Vec<TeacherVerdict> = teacher::read_verdicts(verdicts)?;
    let (items, missing) = service::items_from_verdicts(&verdicts, &corpus);
    if !missing.is_empty() {
        bail!("{} verdicts refer to messages missing from the corpus, first {}", missing.len(), missing[0]);
    }
    let mut store = ReviewStore::open(store_path)?;
    let added = store.add_items(items)?;
    println!("added {added} items, store holds {}", store.items().len());
    Ok(())
}

fn review_export(store_path: &Path, out: &Path, ties: Option<&Path>) -> Result<()> {
    if !store_path.exists() {
        bail!("review store {} does not exist", store_path.display());
    }
    let store = ReviewStore::open(store_path)?;
    let export = store.export();
    let mut w = create(out)?;
    service::write_export(&mut w, &export)?;
    w.flush()?;
    if let Some(p) = ties {
        let mut t = create(p)?;
        for id in &export.ties {
            writeln!(t, "{id}")?;
        }
        t.flush()?;
    }
    println!(
        "exported {} items; {} ties, {} unreviewed",
        export.records.len(),
        export.ties.len(),
        export.unreviewed.len()
    );
    Ok(())
}

async fn pipeline(n: usize, noise: f64, seed: u64, out_dir: &Path) -> Result<()> {
    let mut config = PipelineConfig::standard(seed, noise);
    config.synth.n_messages = n;
    let out = run_pipeline(&config).await?;
    std::fs::create_dir_all(out_dir)?;
    std::fs::write(out_dir.join("model.bin"), &out.model_bytes)?;
    std::fs::write(out_dir.join("report.jsonl"), &out.report_bytes)?;
    corpus::save_corpus(&out_dir.join("corpus.jsonl"), &out.corpus)?;
    println!(
        "{}",
        json!({
            "census": out.census,
            "labeling_failures": out.labeling_failures,
            "train": out.split.train.len(),
            "val": out.split.val.len(),
            "test": out.split.test.len(),
            "validation_accuracy": out.train_report.validation_accuracy,
            "test_accuracy": out.test_accuracy(),
            "model_version": out.model.model_version(),
        })
    );
    Ok(())
}

#[tokio::main]
async fn main() -> Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()))
        .with_writer(std::io::stderr)
        .init();

    match Cli::parse().command {
        Command::Ingest {
            input,
            out,
            first_per_encounter,
        } => {
            let report = corpus::ingest_path(&input)?;
            for r in &report.rejects {
                eprintln!("{}:{}: {}", input.display(), r.line, r.reason);
            }
            let kept = if first_per_encounter {
                corpus::first_message_per_encounter(&report.corpus)
            } else {
                report.corpus
            };
            corpus::save_corpus(&out, &kept)?;
            println!("accepted {} records, rejected {}", kept.len(), report.rejects.len());
        }
        Command::Synth {
            n,
            balance,
            overlap,
            templates,
            consistency,
            seed,
            out,
        } => {
            let config = SynthConfig {
                n_messages: n,
                class_balance: balance,
                overlap,
                seed,
                templates_per_class: templates,
                metadata_consistency: consistency,
            };
            let corpus = corpus::generate_synthetic(&config)?;
            corpus::save_corpus(&out, &corpus)?;
            println!("wrote {} messages to {}", corpus.len(), out.display());
        }
        Command::Split {
            corpus,
            ratios,
            seed,
            labels,
            out,
            materialize,
        } => split_cmd(&corpus, &ratios, seed, labels.as_deref(), &out, materialize.as_deref())?,
        Command::Weaklabel { corpus, out } => {
            let corpus = load(&corpus)?;
            if let Some(path) = out {
                let mut w = create(&path)?;
                for m in &corpus {
                    write_json_line(&mut w, &weak_labeler::grouped_record(m))?;
                }
                w.flush()?;
            }
            println!("{}", serde_json::to_string(&weak_labeler::census(&corpus))?);
        }
        Command::Topics(args) => topics_cmd(args)?,
        Command::SampleExemplars {
            corpus,
            topics: topics_path,
            budget,
            seed,
            out,
        } => {
            let corpus = load(&corpus)?;
            let model = topics::load_topic_model(&topics_path)?;
            let set = teacher::sample_exemplars(&corpus, &model, budget, seed)?;
            set.save(&out)?;
            println!("{} admin + {} clinical exemplars from {} topics", set.admin.len(), set.clinical.len(), set.source_topics().len());
        }
        Command::Label(args) => label(args).await?,
        Command::Train(args) => train(args)?,
        Command::Predict { model, input, out } => {
            let model = student::load_model(&model)?;
            let corpus = load(&input)?;
            let mut w = create(&out)?;
            for m in &corpus {
                let score = model.predict_score(&m.text());
                write_json_line(
                    &mut w,
                    &json!({"id": m.id, "label": student::label_for_score(score), "confidence": score}),
                )?;
            }
            w.flush()?;
        }
        Command::Eval {
            model,
            test,
            topics,
            out,
        } => eval(&model, &test, topics.as_deref(), &out)?,
        Command::Experiment(args) => experiment(args).await?,
        Command::Serve {
            model,
            review_store,
            bind,
        } => service::serve(&model, &review_store, &bind).await?,
        Command::ReviewLoad {
            verdicts,
            corpus,
            store,
        } => review_load(&verdicts, &corpus, &store)?,
        Command::ReviewExport { store, out, ties } => review_export(&store, &out, ties.as_deref())?,
        Command::Pipeline { n, noise, seed, out_dir } => pipeline(n, noise, seed, &out_dir).await?,
    }
    Ok(())
}
