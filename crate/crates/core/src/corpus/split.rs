use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::message::{Corpus, Label, Message};
use crate::alloc::largest_remainder;

#[derive(Debug, Error, PartialEq)]
pub enum SplitError {
    #[error("corpus has {0} message(s); at least 3 are required")]
    TooSmall(usize),
    #[error("invalid ratios {0:?}: each must be positive and they must sum to 1")]
    InvalidRatios([f64; 3]),
    #[error("message {0:?} has no label to stratify on")]
    Unlabeled(String),
}

/// Stratified train/validation/test partition of a corpus, by message id.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub train: Vec<String>,
    pub val: Vec<String>,
    pub test: Vec<String>,
    pub ratios: [f64; 3],
    pub seed: u64,
}

impl DatasetSplit {
    pub fn parts(&self) -> [&[String]; 3] {
        [&self.train, &self.val, &self.test]
    }
}

pub fn parse_ratios(s: &str) -> Result<[f64; 3], SplitError> {
    let vals: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| SplitError::InvalidRatios([f64::NAN; 3]))?;
    let ratios: [f64; 3] = vals
        .try_into()
        .map_err(|_| SplitError::InvalidRatios([f64::NAN; 3]))?;
    validate_ratios(ratios)?;
    Ok(ratios)
}

fn validate_ratios(ratios: [f64; 3]) -> Result<(), SplitError> {
    let ok = ratios.iter().all(|r| r.is_finite() && *r > 0.0)
        && (ratios.iter().sum::<f64>() - 1.0).abs() <= 1e-9;
    if ok {
        Ok(())
    } else {
        Err(SplitError::InvalidRatios(ratios))
    }
}

/// Partitions `corpus` into train/val/test, stratified by the label returned
/// from `label_of`. Each class is shuffled with a seeded generator and cut by
/// largest-remainder apportionment, so per-class part sizes are within one of
/// their exact quota. Ids within each part follow corpus order.
pub fn split<F>(corpus: &Corpus, label_of: F, ratios: [f64; 3], seed: u64) -> Result<DatasetSplit, SplitError>
where
    F: Fn(&Message) -> Option<Label>,
{
    validate_ratios(ratios)?;
    if corpus.len() < 3 {
        return Err(SplitError::TooSmall(corpus.len()));
    }

    let mut by_class: HashMap<Label, Vec<usize>> = HashMap::new();
    for (pos, msg) in corpus.messages.iter().enumerate() {
        let label = label_of(msg).ok_or_else(|| SplitError::Unlabeled(msg.id.clone()))?;
        by_class.entry(label).or_default().push(pos);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut parts: [Vec<usize>; 3] = Default::default();
    for label in Label::ALL {
        let Some(mut positions) = by_class.remove(&label) else {
            continue;
        };
        positions.shuffle(&mut rng);
        let counts = largest_remainder(positions.len(), &ratios);
        let mut rest = positions.as_slice();
        for (part, n) in parts.iter_mut().zip(counts) {
            let (head, tail) = rest.split_at(n);
            part.extend_from_slice(head);
            rest = tail;
        }
    }

    let [train, val, test] = parts.map(|mut p| {
        p.sort_unstable();
        p.into_iter().map(|i| corpus.messages[i].id.clone()).collect::<Vec<_>>()
    });
    Ok(DatasetSplit {
        train,
        val,
        test,
        ratios,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::synth::{generate_synthetic, SynthConfig};

    fn gold(m: &Message) -> Option<Label> {
        m.gold_label
    }

    #[test]
    fn balanced_thousand() {
        let corpus = generate_synthetic(&SynthConfig::new(1000, 7)).unwrap();
        let s = split(&corpus, gold, [0.8, 0.1, 0.1], 11).unwrap();
        assert_eq!((s.train.len(), s.val.len(), s.test.len()), (800, 100, 100));
        for part in [&s.val, &s.test] {
            let clinical = corpus
                .select(part)
                .iter()
                .filter(|m| m.gold_label == Some(Label::Clinical))
                .count();
            assert_eq!(clinical, 50);
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let corpus = generate_synthetic(&SynthConfig::new(300, 1)).unwrap();
        let a = split(&corpus, gold, [0.8, 0.1, 0.1], 5).unwrap();
        let b = split(&corpus, gold, [0.8, 0.1, 0.1], 5).unwrap();
        let c = split(&corpus, gold, [0.8, 0.1, 0.1], 6).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.test, c.test);
    }

    #[test]
    fn errors() {
        let corpus = generate_synthetic(&SynthConfig::new(2, 1)).unwrap();
        assert_eq!(
            split(&corpus, gold, [0.8, 0.1, 0.1], 0),
            Err(SplitError::TooSmall(2))
        );
        let corpus = generate_synthetic(&SynthConfig::new(10, 1)).unwrap();
        assert!(matches!(
            split(&corpus, gold, [0.8, 0.1, 0.2], 0),
            Err(SplitError::InvalidRatios(_))
        ));
        assert!(matches!(
            split(&corpus, gold, [1.0, 0.0, 0.0], 0),
            Err(SplitError::InvalidRatios(_))
        ));
        assert!(matches!(
            split(&corpus, |_| None, [0.8, 0.1, 0.1], 0),
            Err(SplitError::Unlabeled(_))
        ));
    }

    #[test]
    fn ratio_parsing() {
        assert_eq!(parse_ratios("0.8,0.1,0.1").unwrap(), [0.8, 0.1, 0.1]);
        assert!(parse_ratios("0.8,0.2").is_err());
        assert!(parse_ratios("a,b,c").is_err());
    }
}
