use std::collections::{BTreeMap, HashMap};

use super::tokenize::topic_tokens;
use super::TopicsError;
use crate::sparse::SparseVec;

/// Lexicographically ordered vocabulary with its inverse-document-frequency
/// weights, and one L2-normalized row per input document.
#[derive(Clone, Debug, PartialEq)]
pub struct TfidfEmbedding {
    pub vocabulary: Vec<String>,
    pub idf: Vec<f64>,
    pub rows: Vec<SparseVec>,
}

impl TfidfEmbedding {
    pub fn dim(&self) -> usize {
        self.vocabulary.len()
    }
}

/// Term weights `tf(t,d) * ln((1 + N) / (1 + df(t)))`, rows L2-normalized.
/// Terms occurring in fewer than `min_doc_freq` documents are dropped.
pub fn tfidf_embed<S: AsRef<str>>(docs: &[S], min_doc_freq: usize) -> Result<TfidfEmbedding, TopicsError> {
    if docs.is_empty() {
        return Err(TopicsError::EmptyCorpus);
    }
    let tokenized: Vec<Vec<String>> = docs.iter().map(|d| topic_tokens(d.as_ref())).collect();

    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    for tokens in &tokenized {
        let mut seen: Vec<&str> = tokens.iter().map(String::as_str).collect();
        seen.sort_unstable();
        seen.dedup();
        for t in seen {
            *df.entry(t).or_default() += 1;
        }
    }

    let n = docs.len() as f64;
    let kept: Vec<(&str, usize)> = df
        .into_iter()
        .filter(|(_, f)| *f >= min_doc_freq.max(1))
        .collect();
    if kept.is_empty() {
        return Err(TopicsError::EmptyVocabulary);
    }
    let vocabulary: Vec<String> = kept.iter().map(|(t, _)| t.to_string()).collect();
    let idf: Vec<f64> = kept
        .iter()
        .map(|(_, f)| ((1.0 + n) / (1.0 + *f as f64)).ln())
        .collect();
    let index: HashMap<&str, u32> = kept
        .iter()
        .enumerate()
        .map(|(i, (t, _))| (*t, i as u32))
        .collect();

    let rows = tokenized
        .iter()
        .map(|tokens| {
            let pairs = tokens
                .iter()
                .filter_map(|t| index.get(t.as_str()).map(|&i| (i, idf[i as usize])))
                .collect();
            SparseVec::from_pairs(pairs).normalized()
        })
        .collect();

    Ok(TfidfEmbedding {
        vocabulary,
        idf,
        rows,
    })
}
