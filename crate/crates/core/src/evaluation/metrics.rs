use serde::{Deserialize, Serialize};

use super::EvaluationError;
use crate::corpus::EntitySpan;

/// Rows are gold labels, columns are predictions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub labels: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.labels.len()).map(|i| self.counts[i][i]).sum()
    }
}

pub fn confusion<S: AsRef<str>>(golds: &[S], preds: &[S], labels: &[String]) -> Result<ConfusionMatrix, EvaluationError> {
    if golds.len() != preds.len() {
        return Err(EvaluationError::LengthMismatch {
            golds: golds.len(),
            preds: preds.len(),
        });
    }
    let index = |l: &str| {
        labels
            .iter()
            .position(|x| x == l)
            .ok_or_else(|| EvaluationError::UnknownLabel(l.to_string()))
    };
    let mut counts = vec![vec![0; labels.len()]; labels.len()];
    for (g, p) in golds.iter().zip(preds) {
        counts[index(g.as_ref())?][index(p.as_ref())?] += 1;
    }
    Ok(ConfusionMatrix {
        labels: labels.to_vec(),
        counts,
    })
}

/// Accuracy plus support-weighted precision, recall and F1, in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub accuracy: f64,
    pub weighted_precision: f64,
    pub weighted_recall: f64,
    pub weighted_f1: f64,
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Per-class scores use 0 when a denominator is 0; averages are weighted by
/// gold support. Weighted recall therefore equals accuracy up to rounding.
pub fn weighted_metrics(cm: &ConfusionMatrix) -> Result<MetricsRow, EvaluationError> {
    let total = cm.total() as f64;
    if total == 0.0 {
        return Err(EvaluationError::EmptyMatrix);
    }
    let n = cm.labels.len();
    let (mut precision, mut recall, mut f1) = (0.0, 0.0, 0.0);
    for c in 0..n {
        let tp = cm.counts[c][c] as f64;
        let support: f64 = cm.counts[c].iter().sum::<u64>() as f64;
        let predicted: f64 = (0..n).map(|r| cm.counts[r][c]).sum::<u64>() as f64;
        let p = ratio(tp, predicted);
        let r = ratio(tp, support);
        precision += support * p;
        recall += support * r;
        f1 += support * ratio(2.0 * p * r, p + r);
    }
    Ok(MetricsRow {
        accuracy: cm.trace() as f64 / total,
        weighted_precision: precision / total,
        weighted_recall: recall / total,
        weighted_f1: f1 / total,
    })
}

pub const HISTOGRAM_BINS: usize = 20;

/// Uniform bins over `[0, 1]`; bin `i` is `[i/20, (i+1)/20)` except the last,
/// which also includes 1.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfidenceHistogram {
    pub correct: Vec<u64>,
    pub wrong: Vec<u64>,
}

impl ConfidenceHistogram {
    pub fn edges(i: usize) -> (f64, f64) {
        (i as f64 / HISTOGRAM_BINS as f64, (i + 1) as f64 / HISTOGRAM_BINS as f64)
    }

    pub fn total(&self) -> u64 {
        self.correct.iter().chain(&self.wrong).sum()
    }
}

pub fn confidence_histogram(results: &[(bool, f64)]) -> ConfidenceHistogram {
    let mut h = ConfidenceHistogram {
        correct: vec![0; HISTOGRAM_BINS],
        wrong: vec![0; HISTOGRAM_BINS],
    };
    for &(ok, confidence) in results {
        let bin = ((confidence.clamp(0.0, 1.0) * HISTOGRAM_BINS as f64) as usize).min(HISTOGRAM_BINS - 1);
        if ok {
            h.correct[bin] += 1;
        } else {
            h.wrong[bin] += 1;
        }
    }
    h
}

/// Micro-averaged exact-span entity scores.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntityMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub gold: usize,
    pub predicted: usize,
}

/// A predicted span counts when its offsets and type equal a gold span of
/// the same message.
pub fn entity_metrics(pairs: &[(Vec<EntitySpan>, Vec<EntitySpan>)]) -> EntityMetrics {
    let key = |e: &EntitySpan| (e.start, e.end, e.entity.clone());
    let (mut tp, mut gold, mut predicted) = (0usize, 0usize, 0usize);
    for (g, p) in pairs {
        let mut remaining: Vec<_> = g.iter().map(key).collect();
        gold += g.len();
        predicted += p.len();
        for span in p {
            if let Some(i) = remaining.iter().position(|k| *k == key(span)) {
                remaining.swap_remove(i);
                tp += 1;
            }
        }
    }
    let precision = ratio(tp as f64, predicted as f64);
    let recall = ratio(tp as f64, gold as f64);
    EntityMetrics {
        precision,
        recall,
        f1: ratio(2.0 * precision * recall, precision + recall),
        gold,
        predicted,
    }
}
