use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::corpus::Label;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TopicAccuracy {
    pub topic: usize,
    pub n: usize,
    pub accuracy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerTopicAccuracy {
    /// Sorted by accuracy descending, then topic id.
    pub rows: Vec<TopicAccuracy>,
    /// Topics with accuracy strictly above [`TOPIC_ACCURACY_THRESHOLD`].
    pub above_threshold: usize,
}

pub const TOPIC_ACCURACY_THRESHOLD: f64 = 0.8;

impl PerTopicAccuracy {
    pub fn weighted_mean(&self) -> f64 {
        let n: usize = self.rows.iter().map(|r| r.n).sum();
        self.rows.iter().map(|r| r.accuracy * r.n as f64).sum::<f64>() / n as f64
    }
}

pub fn per_topic_accuracy(
    predictions: &[Label],
    golds: &[Label],
    topics: &[Option<usize>],
) -> Result<PerTopicAccuracy, EvalError> {
    if predictions.len() != golds.len() || predictions.len() != topics.len() {
        return Err(EvalError::LengthMismatch {
            left: predictions.len(),
            right: golds.len().min(topics.len()),
        });
    }
    if predictions.is_empty() {
        return Err(EvalError::Empty);
    }
    let mut counts: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
    for (i, ((p, g), t)) in predictions.iter().zip(golds).zip(topics).enumerate() {
        let t = t.ok_or(EvalError::Unassigned(i))?;
        let e = counts.entry(t).or_default();
        e.0 += 1;
        e.1 += usize::from(p == g);
    }
    let mut rows: Vec<TopicAccuracy> = counts
        .into_iter()
        .map(|(topic, (n, hits))| TopicAccuracy {
            topic,
            n,
            accuracy: hits as f64 / n as f64,
        })
        .collect();
    rows.sort_by(|a, b| b.accuracy.total_cmp(&a.accuracy).then(a.topic.cmp(&b.topic)));
    let above_threshold = rows.iter().filter(|r| r.accuracy > TOPIC_ACCURACY_THRESHOLD).count();
    Ok(PerTopicAccuracy { rows, above_threshold })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use Label::{Admin as A, Clinical as C};

    #[test]
    fn single_topic_matches_overall() {
        let r = per_topic_accuracy(&[A, C, C, A], &[A, C, A, A], &[Some(3); 4]).unwrap();
        assert_eq!(r.rows, [TopicAccuracy { topic: 3, n: 4, accuracy: 0.75 }]);
        assert_eq!(r.above_threshold, 0);
    }

    #[test]
    fn extremes() {
        let r = per_topic_accuracy(&[A, A, C, C], &[A, A, A, A], &[Some(1), Some(1), Some(0), Some(0)]).unwrap();
        assert_eq!(r.rows[0], TopicAccuracy { topic: 1, n: 2, accuracy: 1.0 });
        assert_eq!(r.rows[1], TopicAccuracy { topic: 0, n: 2, accuracy: 0.0 });
        assert_eq!(r.above_threshold, 1);
    }

    #[test]
    fn unassigned_is_an_error() {
        assert!(matches!(per_topic_accuracy(&[A, A], &[A, A], &[Some(0), None]), Err(EvalError::Unassigned(1))));
    }

    proptest! {
        #[test]
        fn weighted_mean_is_overall_accuracy(rows in proptest::collection::vec((any::<bool>(), any::<bool>(), 0usize..6), 1..200)) {
            let lab = |b: bool| if b { C } else { A };
            let preds: Vec<Label> = rows.iter().map(|r| lab(r.0)).collect();
            let golds: Vec<Label> = rows.iter().map(|r| lab(r.1)).collect();
            let topics: Vec<Option<usize>> = rows.iter().map(|r| Some(r.2)).collect();
            let p = per_topic_accuracy(&preds, &golds, &topics).unwrap();
            let overall = rows.iter().filter(|r| r.0 == r.1).count() as f64 / rows.len() as f64;
            prop_assert!((p.weighted_mean() - overall).abs() <= 1e-12);
            prop_assert!(p.rows.iter().all(|r| r.n >= 1));
        }
    }
}
