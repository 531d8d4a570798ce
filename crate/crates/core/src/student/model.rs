use super::features::{featurize, FeatureConfig};
use super::StudentError;
use crate::corpus::Label;
use crate::sparse::SparseVec;

pub const MODEL_VERSION: &str = "1.0";
pub const LABEL_CONVENTION: &str = "clinical_positive";

/// Linear classifier over hashed n-gram features. Scores are the probability
/// of the Clinical class.
#[derive(Clone, Debug, PartialEq)]
pub struct StudentModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub feature_config: FeatureConfig,
    pub version: String,
    pub training_fingerprint: String,
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// ln(1 + e^z) without overflow.
pub fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

impl StudentModel {
    pub fn zeros(feature_config: FeatureConfig) -> Self {
        Self {
            weights: vec![0.0; feature_config.hash_dim],
            bias: 0.0,
            feature_config,
            version: MODEL_VERSION.to_string(),
            training_fingerprint: String::new(),
        }
    }

    pub fn check(&self) -> Result<(), StudentError> {
        self.feature_config.validate()?;
        if self.weights.len() != self.feature_config.hash_dim {
            return Err(StudentError::DimensionMismatch {
                weights: self.weights.len(),
                hash_dim: self.feature_config.hash_dim,
            });
        }
        Ok(())
    }

    pub fn logit(&self, x: &SparseVec) -> f64 {
        x.dot_dense(&self.weights) + self.bias
    }

    pub fn score_vector(&self, x: &SparseVec) -> f64 {
        sigmoid(self.logit(x))
    }

    pub fn featurize(&self, text: &str) -> SparseVec {
        featurize(text, &self.feature_config)
    }

    pub fn predict_score(&self, text: &str) -> f64 {
        self.score_vector(&self.featurize(text))
    }

    pub fn predict_label(&self, text: &str) -> Label {
        label_for_score(self.predict_score(text))
    }

    /// Version string exposed by the service: file format version plus a
    /// prefix of the training fingerprint.
    pub fn model_version(&self) -> String {
        let fp: String = self.training_fingerprint.chars().take(12).collect();
        if fp.is_empty() {
            self.version.clone()
        } else {
            format!("{}+{fp}", self.version)
        }
    }
}

/// Clinical at or above 0.5, so an undecided score goes to the clinical queue.
pub fn label_for_score(score: f64) -> Label {
    if score >= 0.5 {
        Label::Clinical
    } else {
        Label::Admin
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> FeatureConfig {
        FeatureConfig::words_only(&[1], 1 << 8)
    }

    #[test]
    fn zero_model_scores_one_half() {
        let m = StudentModel::zeros(small());
        assert_eq!(m.predict_score("anything at all"), 0.5);
        assert_eq!(m.predict_label("anything at all"), Label::Clinical);
        assert_eq!(m.predict_label(""), Label::Clinical);
    }

    #[test]
    fn negative_bias_is_admin() {
        let mut m = StudentModel::zeros(small());
        m.bias = -1.0;
        for t in ["", "fever", "please send the form"] {
            assert_eq!(m.predict_label(t), Label::Admin);
        }
    }

    #[test]
    fn single_feature_hand_model() {
        let mut m = StudentModel::zeros(small());
        let x = m.featurize("wheezing");
        assert_eq!(x.nnz(), 1);
        m.weights[x.indices[0] as usize] = 2.0;
        let s = m.predict_score("wheezing");
        assert!((s - 0.880797).abs() < 5e-7, "{s}");
    }

    #[test]
    fn score_increases_with_bias() {
        let mut m = StudentModel::zeros(small());
        let mut last = 0.0;
        for b in -20..=20 {
            m.bias = b as f64;
            let s = m.predict_score("cough");
            assert!(s > last);
            last = s;
        }
    }

    #[test]
    fn tie_goes_clinical() {
        assert_eq!(label_for_score(0.5), Label::Clinical);
        assert_eq!(label_for_score(0.5 - 1e-12), Label::Admin);
    }

    #[test]
    fn stable_link_functions() {
        assert_eq!(sigmoid(-1000.0), 0.0);
        assert_eq!(sigmoid(1000.0), 1.0);
        assert!((softplus(0.0) - std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(softplus(1000.0), 1000.0);
        assert!(softplus(-1000.0) >= 0.0);
    }
}
