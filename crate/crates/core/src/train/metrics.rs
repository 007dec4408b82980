//! Accuracy and (non-interpolated) mean average precision.

use std::cmp::Ordering;

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub accuracy: f64,
    /// `None` for classes with no positive test sample.
    pub per_class_ap: Vec<Option<f64>>,
    pub map: f64,
    pub classes_without_positives: Vec<usize>,
}

/// Index of the largest entry, lowest index on ties.
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// Mean precision at the rank of each positive, ranking by descending
/// score with ties broken by ascending sample index.
pub fn average_precision(scores: &[f64], positive: &[bool]) -> Option<f64> {
    let n_pos = positive.iter().filter(|&&p| p).count();
    if n_pos == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| match scores[b].total_cmp(&scores[a]) {
        Ordering::Equal => a.cmp(&b),
        o => o,
    });
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (rank, &i) in order.iter().enumerate() {
        if positive[i] {
            hits += 1;
            sum += hits as f64 / (rank + 1) as f64;
        }
    }
    Some(sum / n_pos as f64)
}

pub fn evaluate(scores: ArrayView2<'_, f64>, labels: &[usize]) -> Result<Evaluation> {
    let (n, m) = scores.dim();
    if n != labels.len() {
        return Err(Error::DimensionMismatch {
            what: "score rows vs labels",
            expected: n,
            got: labels.len(),
        });
    }
    if n == 0 {
        return Err(Error::EmptyDataset("no test samples".into()));
    }
    if let Some(&bad) = labels.iter().find(|&&y| y >= m) {
        return Err(Error::LabelOutOfRange {
            label: bad,
            classes: m,
        });
    }
    let correct = scores
        .rows()
        .into_iter()
        .zip(labels)
        .filter(|(row, &y)| argmax(&row.to_vec()) == y)
        .count();

    let mut per_class_ap = Vec::with_capacity(m);
    let mut without = Vec::new();
    for c in 0..m {
        let col = scores.column(c).to_vec();
        let pos: Vec<bool> = labels.iter().map(|&y| y == c).collect();
        let ap = average_precision(&col, &pos);
        if ap.is_none() {
            without.push(c);
        }
        per_class_ap.push(ap);
    }
    let defined: Vec<f64> = per_class_ap.iter().flatten().copied().collect();
    let map = defined.iter().sum::<f64>() / defined.len() as f64;
    Ok(Evaluation {
        accuracy: correct as f64 / n as f64,
        per_class_ap,
        map,
        classes_without_positives: without,
    })
}
