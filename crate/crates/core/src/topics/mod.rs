//! Topic discovery: TF-IDF embedding, k-means and agglomerative clustering,
//! and class-based TF-IDF topic terms.

mod ctfidf;
mod discover;
mod hierarchical;
mod kmeans;
mod tfidf;
mod tokenize;

use thiserror::Error;

pub use ctfidf::{ctfidf_table, ctfidf_terms, CtfidfTable};
pub use discover::{
    discover_topics, load_topic_model, read_topic_model, save_topic_model, write_topic_model,
    KChoice, TopicModel, TopicParams, DEFAULT_K_GRID,
};
pub use hierarchical::{
    agglomerate, cosine_distance, hierarchical_cluster, Condensed, Dendrogram, Linkage, Merge,
    DEFAULT_ITEM_CAP,
};
pub use kmeans::{kmeans, kmeans_restarts, mean_silhouette, KMeansResult};
pub use tfidf::{tfidf_embed, TfidfEmbedding};
pub use tokenize::{topic_tokens, STOPWORDS};

#[derive(Debug, Error)]
pub enum TopicsError {
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("vocabulary is empty after document-frequency filtering")]
    EmptyVocabulary,
    #[error("k = {k} is invalid for {n} item(s)")]
    InvalidK { k: usize, n: usize },
    #[error("no k in the candidate grid fits {n} item(s)")]
    NoCandidateK { n: usize },
    #[error("{n} items exceed the hierarchical clustering cap of {cap}; sample first (e.g. --sample)")]
    TooManyItems { n: usize, cap: usize },
    #[error("hierarchical clustering needs at least 2 items, got {0}")]
    TooFewItems(usize),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad topic model file: {0}")]
    Format(String),
}
