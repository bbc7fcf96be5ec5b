use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Positive class is 1 (submitted / selected).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl ConfusionMatrix {
    pub fn from_labels(y_true: &[u8], y_pred: &[u8]) -> Result<Self> {
        if y_true.len() != y_pred.len() {
            return Err(Error::LengthMismatch {
                left: y_true.len(),
                right: y_pred.len(),
            });
        }
        let mut m = ConfusionMatrix::default();
        for (&t, &p) in y_true.iter().zip(y_pred) {
            match (t, p) {
                (1, 1) => m.tp += 1,
                (0, 1) => m.fp += 1,
                (0, 0) => m.tn += 1,
                (1, 0) => m.fn_ += 1,
                _ => return Err(Error::InvalidConfig(format!("labels must be 0 or 1, got ({t}, {p})"))),
            }
        }
        Ok(m)
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn accuracy(&self) -> f64 {
        (self.tp + self.tn) as f64 / self.total() as f64
    }

    /// Per-class view: (correct predictions of c, predictions of c, actual c).
    fn class_counts(&self, class: u8) -> (usize, usize, usize) {
        if class == 1 {
            (self.tp, self.tp + self.fp, self.tp + self.fn_)
        } else {
            (self.tn, self.tn + self.fn_, self.tn + self.fp)
        }
    }
}

/// Precision, recall and F1 for one class. A zero denominator gives 0 and
/// sets the matching flag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class: u8,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
    pub precision_undefined: bool,
    pub recall_undefined: bool,
    pub f1_undefined: bool,
}

fn ratio(num: usize, den: usize) -> (f64, bool) {
    if den == 0 {
        (0.0, true)
    } else {
        (num as f64 / den as f64, false)
    }
}

impl ClassMetrics {
    fn from_confusion(m: &ConfusionMatrix, class: u8) -> Self {
        let (correct, predicted, actual) = m.class_counts(class);
        let (precision, precision_undefined) = ratio(correct, predicted);
        let (recall, recall_undefined) = ratio(correct, actual);
        let (f1, f1_undefined) = if precision + recall == 0.0 {
            (0.0, true)
        } else {
            (2.0 * precision * recall / (precision + recall), false)
        };
        ClassMetrics {
            class,
            precision,
            recall,
            f1,
            support: actual,
            precision_undefined,
            recall_undefined,
            f1_undefined,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub confusion: ConfusionMatrix,
    /// Class 0 then class 1.
    pub classes: [ClassMetrics; 2],
    pub accuracy: f64,
}

pub fn metrics(y_true: &[u8], y_pred: &[u8]) -> Result<Metrics> {
    let confusion = ConfusionMatrix::from_labels(y_true, y_pred)?;
    if confusion.total() == 0 {
        return Err(Error::TooFewSamples { min: 1, got: 0 });
    }
    Ok(Metrics {
        classes: [
            ClassMetrics::from_confusion(&confusion, 0),
            ClassMetrics::from_confusion(&confusion, 1),
        ],
        accuracy: confusion.accuracy(),
        confusion,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn perfect_prediction() {
        let y = [0, 1, 1, 0, 1];
        let m = metrics(&y, &y).unwrap();
        assert_eq!(m.accuracy, 1.0);
        for c in &m.classes {
            assert_eq!((c.precision, c.recall, c.f1), (1.0, 1.0, 1.0));
        }
    }

    #[test]
    fn hand_counted_fixture() {
        let m = metrics(&[0, 0, 1, 1], &[0, 1, 1, 1]).unwrap();
        assert_eq!(
            m.confusion,
            ConfusionMatrix {
                tp: 2,
                fp: 1,
                tn: 1,
                fn_: 0
            }
        );
        let c1 = m.classes[1];
        assert!((c1.precision - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(c1.recall, 1.0);
        assert!((c1.f1 - 0.8).abs() < 1e-15);
        assert_eq!(m.accuracy, 0.75);
        let c0 = m.classes[0];
        assert_eq!((c0.precision, c0.recall), (1.0, 0.5));
    }

    #[test]
    fn never_predicting_minority_gives_flagged_zeros() {
        let y_true = [0, 1, 1, 1, 1, 1, 1, 1, 1, 1];
        let m = metrics(&y_true, &[1; 10]).unwrap();
        let c0 = m.classes[0];
        assert_eq!((c0.precision, c0.recall, c0.f1), (0.0, 0.0, 0.0));
        assert!(c0.precision_undefined && c0.f1_undefined);
        assert!(!c0.recall_undefined);
        assert_eq!(m.accuracy, 0.9);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            metrics(&[0, 1], &[0]),
            Err(Error::LengthMismatch { left: 2, right: 1 })
        ));
        assert!(metrics(&[0, 2], &[0, 1]).is_err());
    }

    proptest! {
        #[test]
        fn rows_agree_with_hand_counts(pairs in prop::collection::vec((0u8..2, 0u8..2), 1..60)) {
            let (t, p): (Vec<u8>, Vec<u8>) = pairs.iter().copied().unzip();
            let m = metrics(&t, &p).unwrap();
            let count = |a: u8, b: u8| pairs.iter().filter(|&&x| x == (a, b)).count();
            let (tp, fn_, tn) = (count(1, 1), count(1, 0), count(0, 0));
            if tp + fn_ > 0 {
                prop_assert_eq!(m.classes[1].recall, tp as f64 / (tp + fn_) as f64);
            }
            prop_assert_eq!(m.accuracy, (tp + tn) as f64 / pairs.len() as f64);
            for c in &m.classes {
                prop_assert!((0.0..=1.0).contains(&c.precision) && (0.0..=1.0).contains(&c.f1));
            }
        }
    }
}
