use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::features::{featurize, FeatureConfig};
use super::model::{sigmoid, softplus, StudentModel};
use super::StudentError;
use crate::corpus::Label;
use crate::sparse::SparseVec;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub l2_penalty: f64,
    pub seed: u64,
    pub shuffle_each_epoch: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            epochs: 5,
            batch_size: 64,
            l2_penalty: 1e-4,
            seed: 0,
            shuffle_each_epoch: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), StudentError> {
        let bad = |m: &str| Err(StudentError::InvalidConfig(m.to_string()));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if self.epochs == 0 {
            return bad("epochs must be at least 1");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1");
        }
        if !(self.l2_penalty >= 0.0 && self.l2_penalty.is_finite()) {
            return bad("l2_penalty must be non-negative");
        }
        Ok(())
    }
}

/// A labeled training or validation text.
#[derive(Clone, Debug, PartialEq)]
pub struct Example {
    pub id: String,
    pub text: String,
    pub label: Label,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainReport {
    pub epoch_losses: Vec<f64>,
    /// None when no validation examples were given.
    pub validation_accuracy: Option<f64>,
    pub wall_time: Duration,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Gradient {
    pub loss: f64,
    pub weights: Vec<f64>,
    pub bias: f64,
}

fn target(label: Label) -> f64 {
    if label.is_clinical() {
        1.0
    } else {
        0.0
    }
}

/// Cross-entropy part of the batch objective: mean loss, the weight gradient
/// restricted to the batch's features, and the bias gradient.
fn data_terms(model: &StudentModel, batch: &[(&SparseVec, Label)]) -> Result<(f64, SparseVec, f64), StudentError> {
    if batch.is_empty() {
        return Err(StudentError::EmptyBatch);
    }
    let inv = 1.0 / batch.len() as f64;
    let mut loss = 0.0;
    let mut gb = 0.0;
    let mut pairs = Vec::new();
    for (x, label) in batch {
        if x.values.iter().any(|v| !v.is_finite()) {
            return Err(StudentError::NonFinite("feature value"));
        }
        let z = model.logit(x);
        let y = target(*label);
        loss += softplus(z) - y * z;
        let r = (sigmoid(z) - y) * inv;
        gb += r;
        pairs.extend(x.iter().map(|(i, v)| (i, r * v)));
    }
    Ok((loss * inv, SparseVec::from_pairs(pairs), gb))
}

/// Mean binary cross-entropy plus `l2 / 2 * ||w||^2`, with its gradient.
pub fn loss_and_gradient(model: &StudentModel, batch: &[(SparseVec, Label)], l2_penalty: f64) -> Result<Gradient, StudentError> {
    if model.weights.iter().any(|w| !w.is_finite()) || !model.bias.is_finite() {
        return Err(StudentError::NonFinite("model parameter"));
    }
    let refs: Vec<(&SparseVec, Label)> = batch.iter().map(|(x, l)| (x, *l)).collect();
    let (data_loss, gw, gb) = data_terms(model, &refs)?;
    let mut weights: Vec<f64> = model.weights.iter().map(|w| l2_penalty * w).collect();
    for (i, g) in gw.iter() {
        weights[i as usize] += g;
    }
    let reg = 0.5 * l2_penalty * model.weights.iter().map(|w| w * w).sum::<f64>();
    Ok(Gradient {
        loss: data_loss + reg,
        weights,
        bias: gb,
    })
}

/// SHA-256 over the training ids and labels and both configs.
pub fn training_fingerprint(examples: &[Example], train: &TrainConfig, features: &FeatureConfig) -> String {
    let mut h = Sha256::new();
    for e in examples {
        h.update(e.id.as_bytes());
        h.update(b"\t");
        h.update(e.label.as_str().as_bytes());
        h.update(b"\n");
    }
    h.update(serde_json::to_vec(train).expect("config serializes"));
    h.update(serde_json::to_vec(features).expect("config serializes"));
    hex::encode(h.finalize())
}

pub fn accuracy(model: &StudentModel, examples: &[Example]) -> Option<f64> {
    if examples.is_empty() {
        return None;
    }
    let hits = examples.iter().filter(|e| model.predict_label(&e.text) == e.label).count();
    Some(hits as f64 / examples.len() as f64)
}

/// Mini-batch gradient descent from a zero model. Batches follow a ChaCha8
/// shuffle of the training order seeded by `config.seed`. The loss recorded
/// for an epoch is the size-weighted mean of its batch objectives.
pub fn train(
    examples: &[Example],
    validation: &[Example],
    config: &TrainConfig,
    features: &FeatureConfig,
) -> Result<(StudentModel, TrainReport), StudentError> {
    let started = Instant::now();
    config.validate()?;
    features.validate()?;
    if examples.is_empty() {
        return Err(StudentError::EmptyTrainingSet);
    }
    let xs: Vec<SparseVec> = examples.iter().map(|e| featurize(&e.text, features)).collect();
    let mut model = StudentModel::zeros(features.clone());
    model.training_fingerprint = training_fingerprint(examples, config, features);

    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    let lr = config.learning_rate;
    for epoch in 0..config.epochs {
        if config.shuffle_each_epoch {
            order.shuffle(&mut rng);
        }
        let mut total = 0.0;
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<(&SparseVec, Label)> = chunk.iter().map(|&i| (&xs[i], examples[i].label)).collect();
            let (data_loss, gw, gb) = data_terms(&model, &batch)?;
            let w_sq: f64 = if config.l2_penalty > 0.0 {
                model.weights.iter().map(|w| w * w).sum()
            } else {
                0.0
            };
            let loss = data_loss + 0.5 * config.l2_penalty * w_sq;
            if !loss.is_finite() {
                return Err(StudentError::Diverged { epoch, loss });
            }
            total += loss * chunk.len() as f64;
            if config.l2_penalty > 0.0 {
                let shrink = 1.0 - lr * config.l2_penalty;
                model.weights.iter_mut().for_each(|w| *w *= shrink);
            }
            for (i, g) in gw.iter() {
                model.weights[i as usize] -= lr * g;
            }
            model.bias -= lr * gb;
        }
        let mean = total / examples.len() as f64;
        if !mean.is_finite() || model.weights.iter().any(|w| !w.is_finite()) || !model.bias.is_finite() {
            return Err(StudentError::Diverged { epoch, loss: mean });
        }
        epoch_losses.push(mean);
    }
    let validation_accuracy = accuracy(&model, validation);
    Ok((
        model,
        TrainReport {
            epoch_losses,
            validation_accuracy,
            wall_time: started.elapsed(),
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ex(id: &str, text: &str, label: Label) -> Example {
        Example {
            id: id.into(),
            text: text.into(),
            label,
        }
    }

    fn random_model(rng: &mut ChaCha8Rng, dim: usize) -> StudentModel {
        use rand::Rng;
        let mut m = StudentModel::zeros(FeatureConfig::words_only(&[1], dim));
        m.weights.iter_mut().for_each(|w| *w = rng.gen_range(-2.0..2.0));
        m.bias = rng.gen_range(-1.0..1.0);
        m
    }

    fn random_batch(rng: &mut ChaCha8Rng, dim: usize) -> Vec<(SparseVec, Label)> {
        use rand::Rng;
        let n = rng.gen_range(1..10);
        (0..n)
            .map(|_| {
                let nnz = rng.gen_range(1..6);
                let pairs = (0..nnz).map(|_| (rng.gen_range(0..dim as u32), rng.gen_range(0.1..1.0))).collect();
                let label = if rng.gen() { Label::Clinical } else { Label::Admin };
                (SparseVec::from_pairs(pairs).normalized(), label)
            })
            .collect()
    }

    #[test]
    fn zero_model_loss_is_ln2() {
        let m = StudentModel::zeros(FeatureConfig::words_only(&[1], 16));
        let x = SparseVec::from_pairs(vec![(3, 1.0)]);
        for label in Label::ALL {
            let g = loss_and_gradient(&m, &[(x.clone(), label)], 0.0).unwrap();
            assert!((g.loss - std::f64::consts::LN_2).abs() < 1e-15);
        }
    }

    #[test]
    fn empty_batch_and_non_finite_inputs() {
        let mut m = StudentModel::zeros(FeatureConfig::words_only(&[1], 16));
        assert!(matches!(loss_and_gradient(&m, &[], 0.0), Err(StudentError::EmptyBatch)));
        let nan = SparseVec {
            indices: vec![1],
            values: vec![f64::NAN],
        };
        assert!(matches!(loss_and_gradient(&m, &[(nan, Label::Admin)], 0.0), Err(StudentError::NonFinite(_))));
        m.bias = f64::INFINITY;
        let x = SparseVec::from_pairs(vec![(1, 1.0)]);
        assert!(loss_and_gradient(&m, &[(x, Label::Admin)], 0.0).is_err());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let dim = 32;
        let h = 1e-5;
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..20 {
            let model = random_model(&mut rng, dim);
            let batch = random_batch(&mut rng, dim);
            let l2 = 1e-2;
            let g = loss_and_gradient(&model, &batch, l2).unwrap();
            for i in 0..dim {
                let mut p = model.clone();
                p.weights[i] += h;
                let mut q = model.clone();
                q.weights[i] -= h;
                let fd = (loss_and_gradient(&p, &batch, l2).unwrap().loss - loss_and_gradient(&q, &batch, l2).unwrap().loss) / (2.0 * h);
                let rel = (fd - g.weights[i]).abs() / fd.abs().max(g.weights[i].abs()).max(1e-6);
                assert!(rel < 1e-4, "component {i}: fd {fd} analytic {}", g.weights[i]);
            }
        }
    }

    #[test]
    fn duplicated_batch_gives_same_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let model = random_model(&mut rng, 16);
        let batch = random_batch(&mut rng, 16);
        let doubled: Vec<_> = batch.iter().chain(&batch).cloned().collect();
        let a = loss_and_gradient(&model, &batch, 0.1).unwrap();
        let b = loss_and_gradient(&model, &doubled, 0.1).unwrap();
        assert!((a.loss - b.loss).abs() < 1e-12);
        assert!((a.bias - b.bias).abs() < 1e-12);
        for (x, y) in a.weights.iter().zip(&b.weights) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn separable_pair_is_learned() {
        let data = [ex("a", "refill", Label::Admin), ex("b", "wheezing", Label::Clinical)];
        let config = TrainConfig {
            epochs: 100,
            ..TrainConfig::default()
        };
        let (model, report) = train(&data, &data, &config, &FeatureConfig::words_only(&[1], 1 << 10)).unwrap();
        assert_eq!(report.validation_accuracy, Some(1.0));
        assert_eq!(report.epoch_losses.len(), 100);
        assert!(report.epoch_losses.iter().all(|l| l.is_finite() && *l >= 0.0));
        assert_eq!(model.predict_label("refill"), Label::Admin);
    }

    #[test]
    fn fixed_seed_is_bit_identical() {
        let data: Vec<Example> = (0..40)
            .map(|i| {
                let clinical = i % 2 == 0;
                let text = if clinical { format!("pain day {i}") } else { format!("form copy {i}") };
                ex(&format!("m{i}"), &text, if clinical { Label::Clinical } else { Label::Admin })
            })
            .collect();
        let config = TrainConfig {
            batch_size: 7,
            seed: 3,
            ..TrainConfig::default()
        };
        let fc = FeatureConfig::default();
        let (a, ra) = train(&data, &[], &config, &fc).unwrap();
        let (b, rb) = train(&data, &[], &config, &fc).unwrap();
        assert_eq!(a, b);
        assert_eq!(ra.epoch_losses, rb.epoch_losses);
        assert_eq!(ra.validation_accuracy, None);
        let other = TrainConfig { seed: 4, ..config };
        assert_ne!(train(&data, &[], &other, &fc).unwrap().0.training_fingerprint, a.training_fingerprint);
    }

    #[test]
    fn divergence_is_reported() {
        let data = [ex("a", "x", Label::Admin), ex("b", "y", Label::Clinical)];
        let config = TrainConfig {
            learning_rate: 1e308,
            l2_penalty: 1.0,
            epochs: 3,
            ..TrainConfig::default()
        };
        let r = train(&data, &[], &config, &FeatureConfig::words_only(&[1], 4));
        assert!(matches!(r, Err(StudentError::Diverged { .. })), "{r:?}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn full_batch_descent_is_monotone(seed in 0u64..1000, lr in 0.01f64..0.25, n in 2usize..30) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let words = ["pain", "fever", "form", "refill", "rash", "bill", "cough", "fax"];
            let data: Vec<Example> = (0..n)
                .map(|i| {
                    use rand::Rng;
                    let k = rng.gen_range(1..4);
                    let text: Vec<&str> = (0..k).map(|_| words[rng.gen_range(0..words.len())]).collect();
                    let label = if rng.gen() { Label::Clinical } else { Label::Admin };
                    ex(&format!("m{i}"), &text.join(" "), label)
                })
                .collect();
            let config = TrainConfig {
                learning_rate: lr,
                epochs: 30,
                batch_size: n,
                l2_penalty: 0.0,
                seed,
                shuffle_each_epoch: true,
            };
            let (_, report) = train(&data, &[], &config, &FeatureConfig::default()).unwrap();
            for w in report.epoch_losses.windows(2) {
                prop_assert!(w[1] <= w[0] + 1e-12, "{:?}", report.epoch_losses);
            }
        }
    }
}
