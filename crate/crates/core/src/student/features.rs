use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::StudentError;
use crate::hashing::hash64;
use crate::sparse::SparseVec;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub word_ngram_orders: BTreeSet<usize>,
    pub char_ngram_orders: BTreeSet<usize>,
    pub hash_dim: usize,
    pub lowercase: bool,
    pub hash_seed: u64,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            word_ngram_orders: [1, 2].into(),
            char_ngram_orders: [3].into(),
            hash_dim: 1 << 18,
            lowercase: true,
            hash_seed: 0,
        }
    }
}

impl FeatureConfig {
    pub fn words_only(orders: &[usize], hash_dim: usize) -> Self {
        Self {
            word_ngram_orders: orders.iter().copied().collect(),
            char_ngram_orders: BTreeSet::new(),
            hash_dim,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), StudentError> {
        let bad = |m: &str| Err(StudentError::InvalidConfig(m.to_string()));
        if self.hash_dim < 2 || !self.hash_dim.is_power_of_two() {
            return bad("hash_dim must be a power of two >= 2");
        }
        if u32::try_from(self.hash_dim).is_err() {
            return bad("hash_dim must fit in 32 bits");
        }
        if self.word_ngram_orders.is_empty() && self.char_ngram_orders.is_empty() {
            return bad("at least one n-gram order is required");
        }
        if self.word_ngram_orders.contains(&0) || self.char_ngram_orders.contains(&0) {
            return bad("n-gram orders start at 1");
        }
        Ok(())
    }
}

pub fn tokens(text: &str, lowercase: bool) -> Vec<String> {
    let text = if lowercase { text.to_lowercase() } else { text.to_string() };
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

/// Every n-gram of the text as a namespaced string, e.g. `w2:chest pain` or
/// `c3:che`. Character n-grams stay inside a token.
pub fn ngrams(text: &str, config: &FeatureConfig) -> Vec<String> {
    let toks = tokens(text, config.lowercase);
    let mut out = Vec::new();
    for &n in &config.word_ngram_orders {
        for w in toks.windows(n) {
            out.push(format!("w{n}:{}", w.join(" ")));
        }
    }
    for &n in &config.char_ngram_orders {
        for t in &toks {
            let chars: Vec<char> = t.chars().collect();
            for w in chars.windows(n) {
                out.push(format!("c{n}:{}", w.iter().collect::<String>()));
            }
        }
    }
    out
}

pub fn feature_index(ngram: &str, config: &FeatureConfig) -> u32 {
    (hash64(ngram.as_bytes(), config.hash_seed) & (config.hash_dim as u64 - 1)) as u32
}

/// Hashed n-gram counts, L2-normalized. Empty text gives the zero vector.
pub fn featurize(text: &str, config: &FeatureConfig) -> SparseVec {
    let pairs = ngrams(text, config)
        .iter()
        .map(|g| (feature_index(g, config), 1.0))
        .collect();
    SparseVec::from_pairs(pairs).normalized()
}
