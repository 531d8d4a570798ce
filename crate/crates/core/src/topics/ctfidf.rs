use std::collections::BTreeMap;

use super::tokenize::topic_tokens;

/// Full class-based TF-IDF table: `weights[c]` maps term → W(t, c) for every
/// term occurring in topic `c`.
#[derive(Clone, Debug, PartialEq)]
pub struct CtfidfTable {
    pub weights: Vec<BTreeMap<String, f64>>,
    /// Average number of words per non-empty topic.
    pub avg_words_per_class: f64,
}

/// `W(t, c) = tf(t, c) * ln(1 + A / tf(t))`, where `tf(t, c)` counts `t` in the
/// concatenation of topic `c`'s documents, `tf(t)` counts it over all topics and
/// `A` is the average word count per topic.
pub fn ctfidf_table<S: AsRef<str>>(docs: &[S], assignment: &[usize], k: usize) -> CtfidfTable {
    let mut per_class: Vec<BTreeMap<String, usize>> = vec![BTreeMap::new(); k];
    let mut totals: BTreeMap<String, usize> = BTreeMap::new();
    let mut words = 0usize;
    for (doc, &topic) in docs.iter().zip(assignment) {
        for tok in topic_tokens(doc.as_ref()) {
            *totals.entry(tok.clone()).or_default() += 1;
            *per_class[topic].entry(tok).or_default() += 1;
            words += 1;
        }
    }
    let non_empty = per_class.iter().filter(|c| !c.is_empty()).count().max(1);
    let avg = words as f64 / non_empty as f64;

    let weights = per_class
        .into_iter()
        .map(|counts| {
            counts
                .into_iter()
                .map(|(term, tf)| {
                    let w = tf as f64 * (1.0 + avg / totals[&term] as f64).ln();
                    (term, w)
                })
                .collect()
        })
        .collect();
    CtfidfTable {
        weights,
        avg_words_per_class: avg,
    }
}

/// Top `top_n` terms per topic by weight, ties broken lexicographically. An
/// empty topic yields an empty list.
pub fn ctfidf_terms<S: AsRef<str>>(docs: &[S], assignment: &[usize], k: usize, top_n: usize) -> Vec<Vec<(String, f64)>> {
    ctfidf_table(docs, assignment, k)
        .weights
        .into_iter()
        .map(|w| {
            let mut ranked: Vec<(String, f64)> = w.into_iter().collect();
            ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
            ranked.truncate(top_n);
            ranked
        })
        .collect()
}
