//! Confusion matrix, accuracy and per-class F1.
//!
//! Per-class accuracy is one-vs-rest binary accuracy: for class i,
//! (TP_i + TN_i) / total. Precision, recall and F1 use the 0/0 -> 0
//! convention so every metric is total.

use crate::error::{Error, Result};
use crate::synth::EventLabel;

pub const CLASS_COUNT: usize = EventLabel::COUNT;

/// 5x5 counts; rows are true labels, columns are predictions.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ConfusionMatrix {
    counts: [[u64; CLASS_COUNT]; CLASS_COUNT],
}

impl ConfusionMatrix {
    pub fn new() -> ConfusionMatrix {
        ConfusionMatrix::default()
    }

    pub fn add(&mut self, truth: EventLabel, predicted: EventLabel) {
        self.counts[truth.index()][predicted.index()] += 1;
    }

    pub fn count(&self, truth: EventLabel, predicted: EventLabel) -> u64 {
        self.counts[truth.index()][predicted.index()]
    }

    pub fn counts(&self) -> &[[u64; CLASS_COUNT]; CLASS_COUNT] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    fn row_sum(&self, i: usize) -> u64 {
        self.counts[i].iter().sum()
    }

    fn col_sum(&self, j: usize) -> u64 {
        self.counts.iter().map(|row| row[j]).sum()
    }

    fn trace(&self) -> u64 {
        (0..CLASS_COUNT).map(|i| self.counts[i][i]).sum()
    }
}

/// Tally true/predicted label pairs.
pub fn confusion(truth: &[EventLabel], predicted: &[EventLabel]) -> Result<ConfusionMatrix> {
    if truth.len() != predicted.len() {
        return Err(Error::Data(format!(
            "{} true labels vs {} predictions",
            truth.len(),
            predicted.len()
        )));
    }
    let mut cm = ConfusionMatrix::new();
    for (&t, &p) in truth.iter().zip(predicted) {
        cm.add(t, p);
    }
    Ok(cm)
}

fn safe_div(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Per-class F1 = 2 * precision * recall / (precision + recall).
pub fn f1_per_class(cm: &ConfusionMatrix) -> Result<[f64; CLASS_COUNT]> {
    if cm.total() == 0 {
        return Err(Error::Data("empty confusion matrix".into()));
    }
    let mut out = [0.0; CLASS_COUNT];
    for (i, slot) in out.iter_mut().enumerate() {
        let tp = cm.counts[i][i] as f64;
        let precision = safe_div(tp, cm.col_sum(i) as f64);
        let recall = safe_div(tp, cm.row_sum(i) as f64);
        *slot = safe_div(2.0 * precision * recall, precision + recall);
    }
    Ok(out)
}

/// Per-class one-vs-rest binary accuracy.
pub fn accuracy_per_class(cm: &ConfusionMatrix) -> Result<[f64; CLASS_COUNT]> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::Data("empty confusion matrix".into()));
    }
    let mut out = [0.0; CLASS_COUNT];
    for (i, slot) in out.iter_mut().enumerate() {
        let tp = cm.counts[i][i];
        let tn = total - cm.row_sum(i) - cm.col_sum(i) + tp;
        *slot = (tp + tn) as f64 / total as f64;
    }
    Ok(out)
}

/// trace / total.
pub fn overall_accuracy(cm: &ConfusionMatrix) -> Result<f64> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::Data("empty confusion matrix".into()));
    }
    Ok(cm.trace() as f64 / total as f64)
}

/// Unweighted mean of the per-class F1 scores.
pub fn macro_f1(cm: &ConfusionMatrix) -> Result<f64> {
    let f1 = f1_per_class(cm)?;
    Ok(f1.iter().sum::<f64>() / CLASS_COUNT as f64)
}
