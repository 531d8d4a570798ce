use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::corpus::Label;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
    pub positive_class: Label,
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }

    /// The same counts read with the other class as positive.
    pub fn swapped(&self) -> ConfusionMatrix {
        ConfusionMatrix {
            tp: self.tn,
            fp: self.fn_,
            fn_: self.fp,
            tn: self.tp,
            positive_class: self.positive_class.flipped(),
        }
    }
}

pub fn confusion(predictions: &[Label], golds: &[Label], positive_class: Label) -> Result<ConfusionMatrix, EvalError> {
    if predictions.len() != golds.len() {
        return Err(EvalError::LengthMismatch {
            left: predictions.len(),
            right: golds.len(),
        });
    }
    if predictions.is_empty() {
        return Err(EvalError::Empty);
    }
    let mut m = ConfusionMatrix {
        tp: 0,
        fp: 0,
        fn_: 0,
        tn: 0,
        positive_class,
    };
    for (&p, &g) in predictions.iter().zip(golds) {
        match (p == positive_class, g == positive_class) {
            (true, true) => m.tp += 1,
            (true, false) => m.fp += 1,
            (false, true) => m.fn_ += 1,
            (false, false) => m.tn += 1,
        }
    }
    Ok(m)
}

/// Table metrics. A slot whose denominator is zero is `None`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    pub precision: Option<f64>,
    pub f1: Option<f64>,
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

pub fn metrics(m: &ConfusionMatrix) -> Result<MetricsReport, EvalError> {
    let n = m.total();
    if n == 0 {
        return Err(EvalError::Empty);
    }
    let sensitivity = ratio(m.tp, m.tp + m.fn_);
    let precision = ratio(m.tp, m.tp + m.fp);
    // harmonic mean of precision and sensitivity, written over the counts so
    // it is a single correctly rounded division; undefined when both are 0
    let f1 = match (precision, sensitivity) {
        (Some(_), Some(_)) if m.tp > 0 => Some((2 * m.tp) as f64 / (2 * m.tp + m.fp + m.fn_) as f64),
        _ => None,
    };
    Ok(MetricsReport {
        accuracy: (m.tp + m.tn) as f64 / n as f64,
        sensitivity,
        specificity: ratio(m.tn, m.tn + m.fp),
        precision,
        f1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use Label::{Admin as A, Clinical as C};

    #[test]
    fn hand_built_ten_pairs() {
        let preds = [C, C, C, C, A, A, A, A, A, A];
        let golds = [C, C, C, A, C, A, A, A, A, A];
        let m = confusion(&preds, &golds, C).unwrap();
        assert_eq!((m.tp, m.fp, m.fn_, m.tn), (3, 1, 1, 5));
        let r = metrics(&m).unwrap();
        assert_eq!(r.accuracy, 0.8);
        assert_eq!(r.sensitivity, Some(0.75));
        assert_eq!(r.specificity, Some(5.0 / 6.0));
        assert_eq!(r.precision, Some(0.75));
        assert_eq!(r.f1, Some(0.75));
    }

    #[test]
    fn perfect_and_inverted() {
        let golds: Vec<Label> = (0..20).map(|i| if i < 10 { C } else { A }).collect();
        let m = confusion(&golds, &golds, C).unwrap();
        assert_eq!((m.tp, m.tn, m.fp, m.fn_), (10, 10, 0, 0));
        let r = metrics(&m).unwrap();
        assert_eq!([Some(r.accuracy), r.sensitivity, r.specificity, r.precision, r.f1], [Some(1.0); 5]);
        let flipped: Vec<Label> = golds.iter().map(|l| l.flipped()).collect();
        let m = confusion(&flipped, &golds, C).unwrap();
        assert_eq!((m.tp, m.tn), (0, 0));
        // precision and sensitivity are both 0, so F1 is undefined rather than 0
        assert_eq!(metrics(&m).unwrap().f1, None);
    }

    #[test]
    fn undefined_slots() {
        let m = confusion(&[A, A], &[A, A], C).unwrap();
        let r = metrics(&m).unwrap();
        assert_eq!((r.sensitivity, r.precision, r.f1), (None, None, None));
        assert_eq!(r.specificity, Some(1.0));
    }

    #[test]
    fn errors() {
        assert!(matches!(confusion(&[A], &[A, C], C), Err(EvalError::LengthMismatch { .. })));
        assert!(matches!(confusion(&[], &[], C), Err(EvalError::Empty)));
    }

    #[test]
    fn class_swap_symmetry() {
        let preds = [C, C, A, A, C, A, A];
        let golds = [C, A, A, C, C, A, C];
        let m = confusion(&preds, &golds, C).unwrap();
        let s = confusion(&preds, &golds, A).unwrap();
        assert_eq!(m.swapped(), s);
        let (rm, rs) = (metrics(&m).unwrap(), metrics(&s).unwrap());
        assert_eq!(rm.accuracy, rs.accuracy);
        assert_eq!(rm.sensitivity, rs.specificity);
        assert_eq!(rm.specificity, rs.sensitivity);
        assert_eq!(rs.precision, Some(m.tn as f64 / (m.tn + m.fn_) as f64));
    }
}
