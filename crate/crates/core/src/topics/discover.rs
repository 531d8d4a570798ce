use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ctfidf::ctfidf_terms;
use super::kmeans::{kmeans_restarts, mean_silhouette, KMeansResult};
use super::tfidf::tfidf_embed;
use super::TopicsError;
use crate::corpus::Corpus;
use crate::sparse::SparseVec;

pub const DEFAULT_K_GRID: [usize; 5] = [20, 40, 60, 80, 100];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KChoice {
    Fixed(usize),
    /// Pick the k from the grid with the highest mean silhouette.
    Auto(Vec<usize>),
}

impl KChoice {
    pub fn auto() -> Self {
        KChoice::Auto(DEFAULT_K_GRID.to_vec())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TopicParams {
    pub k: KChoice,
    pub min_doc_freq: usize,
    pub max_iters: usize,
    /// k-means restarts per k; the lowest-inertia run is kept.
    pub n_init: usize,
    pub top_n: usize,
    /// Silhouette is evaluated on at most this many seeded-sampled documents.
    pub silhouette_sample: usize,
}

impl Default for TopicParams {
    fn default() -> Self {
        Self {
            k: KChoice::auto(),
            min_doc_freq: 1,
            max_iters: 100,
            n_init: 10,
            top_n: 10,
            silhouette_sample: 2000,
        }
    }
}

impl TopicParams {
    pub fn with_k(k: usize) -> Self {
        Self {
            k: KChoice::Fixed(k),
            ..Self::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TopicModel {
    pub k: usize,
    pub seed: u64,
    pub params: TopicParams,
    /// Message ids, aligned with `assignment`.
    pub ids: Vec<String>,
    pub assignment: Vec<usize>,
    pub vocabulary: Vec<String>,
    pub centroids: Vec<SparseVec>,
    pub top_terms: Vec<Vec<(String, f64)>>,
    pub inertia: f64,
    /// Mean silhouette of the chosen k when it was auto-selected.
    pub silhouette: Option<f64>,
}

impl TopicModel {
    /// A model carrying only an externally supplied assignment.
    pub fn from_assignment(ids: Vec<String>, assignment: Vec<usize>) -> Self {
        let k = assignment.iter().max().map_or(0, |m| m + 1);
        Self {
            k,
            seed: 0,
            params: TopicParams::with_k(k),
            ids,
            assignment,
            vocabulary: Vec::new(),
            centroids: Vec::new(),
            top_terms: vec![Vec::new(); k],
            inertia: 0.0,
            silhouette: None,
        }
    }

    pub fn assignment_map(&self) -> HashMap<&str, usize> {
        self.ids
            .iter()
            .map(String::as_str)
            .zip(self.assignment.iter().copied())
            .collect()
    }

    pub fn topic_of(&self, id: &str) -> Option<usize> {
        self.ids.iter().position(|i| i == id).map(|p| self.assignment[p])
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &t in &self.assignment {
            sizes[t] += 1;
        }
        sizes
    }
}

/// Drops clusters without members and renumbers the rest densely, keeping
/// their relative order.
fn compact(result: KMeansResult) -> (Vec<usize>, Vec<Vec<f64>>) {
    let k = result.centroids.len();
    let mut used = vec![false; k];
    for &a in &result.assignments {
        used[a] = true;
    }
    let mut remap = vec![usize::MAX; k];
    let mut next = 0;
    for c in 0..k {
        if used[c] {
            remap[c] = next;
            next += 1;
        }
    }
    let assignment = result.assignments.iter().map(|&a| remap[a]).collect();
    let centroids = result
        .centroids
        .into_iter()
        .zip(used)
        .filter_map(|(c, u)| u.then_some(c))
        .collect();
    (assignment, centroids)
}

/// TF-IDF embedding, k-means (fixed or silhouette-selected k) and c-TF-IDF
/// topic terms over the corpus' classification texts.
pub fn discover_topics(corpus: &Corpus, params: &TopicParams, seed: u64) -> Result<TopicModel, TopicsError> {
    if corpus.is_empty() {
        return Err(TopicsError::EmptyCorpus);
    }
    let texts: Vec<String> = corpus.iter().map(|m| m.text()).collect();
    let embedding = tfidf_embed(&texts, params.min_doc_freq)?;
    let dim = embedding.dim();
    let rows = &embedding.rows;
    let n = rows.len();

    let (result, silhouette) = match &params.k {
        KChoice::Fixed(k) => (kmeans_restarts(rows, dim, *k, seed, params.max_iters, params.n_init)?, None),
        KChoice::Auto(grid) => {
            let mut candidates: Vec<usize> = grid.iter().copied().filter(|&k| k >= 2 && k < n).collect();
            candidates.sort_unstable();
            candidates.dedup();
            if candidates.is_empty() {
                return Err(TopicsError::NoCandidateK { n });
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5111_4057_7e00_0001);
            let mut picked: Vec<usize> = if n > params.silhouette_sample {
                sample(&mut rng, n, params.silhouette_sample).into_vec()
            } else {
                (0..n).collect()
            };
            picked.sort_unstable();
            let m = picked.len();
            let mut dist = vec![0.0; m * m];
            for a in 0..m {
                for b in a + 1..m {
                    let d = rows[picked[a]].dist_sq(&rows[picked[b]]).sqrt();
                    dist[a * m + b] = d;
                    dist[b * m + a] = d;
                }
            }
            let mut best: Option<(f64, KMeansResult)> = None;
            for k in candidates {
                let r = kmeans_restarts(rows, dim, k, seed, params.max_iters, params.n_init)?;
                let labels: Vec<usize> = picked.iter().map(|&i| r.assignments[i]).collect();
                let s = mean_silhouette(&dist, m, &labels, k);
                if best.as_ref().is_none_or(|(bs, _)| s > *bs) {
                    best = Some((s, r));
                }
            }
            let (s, r) = best.expect("at least one candidate");
            (r, Some(s))
        }
    };

    let inertia = result.inertia;
    let (assignment, centroids) = compact(result);
    let k = centroids.len();
    let top_terms = ctfidf_terms(&texts, &assignment, k, params.top_n);
    Ok(TopicModel {
        k,
        seed,
        params: params.clone(),
        ids: corpus.iter().map(|m| m.id.clone()).collect(),
        assignment,
        vocabulary: embedding.vocabulary,
        centroids: centroids.iter().map(|c| SparseVec::from_dense(c)).collect(),
        top_terms,
        inertia,
        silhouette,
    })
}

#[derive(Serialize, Deserialize)]
struct Header {
    format: String,
    version: u32,
    k: usize,
    seed: u64,
    params: TopicParams,
    inertia: f64,
    silhouette: Option<f64>,
    top_terms: Vec<Vec<(String, f64)>>,
    vocabulary: Vec<String>,
    centroids: Vec<SparseVec>,
}

#[derive(Serialize, Deserialize)]
struct AssignmentRecord {
    id: String,
    topic: usize,
}

const FORMAT: &str = "optic-topic-model";
const VERSION: u32 = 1;

/// Header line (parameters, vocabulary, centroids, top terms) followed by one
/// `{"id", "topic"}` record per message.
pub fn write_topic_model<W: Write>(mut w: W, model: &TopicModel) -> std::io::Result<()> {
    let header = Header {
        format: FORMAT.into(),
        version: VERSION,
        k: model.k,
        seed: model.seed,
        params: model.params.clone(),
        inertia: model.inertia,
        silhouette: model.silhouette,
        top_terms: model.top_terms.clone(),
        vocabulary: model.vocabulary.clone(),
        centroids: model.centroids.clone(),
    };
    serde_json::to_writer(&mut w, &header)?;
    w.write_all(b"\n")?;
    for (id, &topic) in model.ids.iter().zip(&model.assignment) {
        serde_json::to_writer(&mut w, &AssignmentRecord { id: id.clone(), topic })?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

pub fn save_topic_model(path: &Path, model: &TopicModel) -> Result<(), TopicsError> {
    write_topic_model(BufWriter::new(File::create(path)?), model)?;
    Ok(())
}

pub fn read_topic_model<R: BufRead>(r: R) -> Result<TopicModel, TopicsError> {
    let mut lines = r.lines();
    let first = lines
        .next()
        .ok_or_else(|| TopicsError::Format("empty topic model file".into()))??;
    let header: Header = serde_json::from_str(&first).map_err(|e| TopicsError::Format(format!("header: {e}")))?;
    if header.format != FORMAT || header.version != VERSION {
        return Err(TopicsError::Format(format!(
            "unsupported topic model {} v{}",
            header.format, header.version
        )));
    }
    let mut ids = Vec::new();
    let mut assignment = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: AssignmentRecord =
            serde_json::from_str(&line).map_err(|e| TopicsError::Format(format!("line {}: {e}", i + 2)))?;
        if rec.topic >= header.k {
            return Err(TopicsError::Format(format!("line {}: topic {} out of range", i + 2, rec.topic)));
        }
        ids.push(rec.id);
        assignment.push(rec.topic);
    }
    Ok(TopicModel {
        k: header.k,
        seed: header.seed,
        params: header.params,
        ids,
        assignment,
        vocabulary: header.vocabulary,
        centroids: header.centroids,
        top_terms: header.top_terms,
        inertia: header.inertia,
        silhouette: header.silhouette,
    })
}

pub fn load_topic_model(path: &Path) -> Result<TopicModel, TopicsError> {
    read_topic_model(BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{generate_synthetic, generate_synthetic_detailed, Message, SenderType, SynthConfig};
    use chrono::Utc;

    #[test]
    fn repeated_document_single_topic() {
        let msg = |i: usize| Message {
            id: format!("m{i}"),
            encounter_id: format!("e{i}"),
            timestamp: Utc::now(),
            sender_type: SenderType::Patient,
            sender_has_clinician_ser: false,
            has_order_activity: false,
            has_note_activity: false,
            subject: String::new(),
            body: "refill my prescription".into(),
            gold_label: None,
        };
        let corpus = Corpus::new((0..5).map(msg).collect(), "t");
        let model = discover_topics(&corpus, &TopicParams::with_k(1), 0).unwrap();
        assert_eq!(model.k, 1);
        assert!(model.assignment.iter().all(|&t| t == 0));
    }

    #[test]
    fn four_template_corpus_is_recovered() {
        let mut cfg = SynthConfig::new(400, 21);
        cfg.templates_per_class = 2;
        cfg.overlap = 0.0;
        let synth = generate_synthetic_detailed(&cfg).unwrap();
        let model = discover_topics(&synth.corpus, &TopicParams::with_k(4), 3).unwrap();
        let mut hits = 0;
        for topic in 0..model.k {
            let mut counts: HashMap<usize, usize> = HashMap::new();
            for (a, t) in model.assignment.iter().zip(&synth.template_ids) {
                if *a == topic {
                    *counts.entry(*t).or_default() += 1;
                }
            }
            hits += counts.values().max().copied().unwrap_or(0);
        }
        let purity = hits as f64 / synth.corpus.len() as f64;
        assert!(purity >= 0.9, "purity {purity}");
    }

    #[test]
    fn deterministic_and_round_trips() {
        let corpus = generate_synthetic(&SynthConfig::new(150, 2)).unwrap();
        let params = TopicParams::with_k(6);
        let a = discover_topics(&corpus, &params, 9).unwrap();
        let b = discover_topics(&corpus, &params, 9).unwrap();
        let mut ba = Vec::new();
        let mut bb = Vec::new();
        write_topic_model(&mut ba, &a).unwrap();
        write_topic_model(&mut bb, &b).unwrap();
        assert_eq!(ba, bb);
        let back = read_topic_model(ba.as_slice()).unwrap();
        assert_eq!(back.assignment, a.assignment);
        assert_eq!(back.ids, a.ids);
        assert_eq!(back.top_terms.len(), a.k);
    }

    #[test]
    fn auto_k_picks_from_grid() {
        let corpus = generate_synthetic(&SynthConfig::new(200, 4)).unwrap();
        let params = TopicParams {
            k: KChoice::Auto(vec![2, 4, 8, 16]),
            ..TopicParams::default()
        };
        let model = discover_topics(&corpus, &params, 1).unwrap();
        assert!(model.silhouette.is_some());
        assert!(model.k <= 16);
        assert_eq!(model.sizes().iter().sum::<usize>(), 200);
        assert!(model.sizes().iter().all(|&s| s > 0));
    }

    #[test]
    fn auto_k_without_candidates() {
        let corpus = generate_synthetic(&SynthConfig::new(10, 4)).unwrap();
        assert!(matches!(
            discover_topics(&corpus, &TopicParams::default(), 1),
            Err(TopicsError::NoCandidateK { n: 10 })
        ));
    }

    #[test]
    fn top_terms_sorted() {
        let corpus = generate_synthetic(&SynthConfig::new(120, 5)).unwrap();
        let model = discover_topics(&corpus, &TopicParams::with_k(5), 2).unwrap();
        for terms in &model.top_terms {
            assert!(terms.windows(2).all(|w| w[0].1 >= w[1].1));
        }
    }
}
