use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

/// Feature vectors with one class label each.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub name: String,
    pub split: Split,
    #[serde(with = "crate::io::matrix")]
    features: Array2<f64>,
    labels: Vec<usize>,
    n_classes: usize,
}

impl Dataset {
    pub fn new(
        name: impl Into<String>,
        split: Split,
        features: Array2<f64>,
        labels: Vec<usize>,
        n_classes: usize,
    ) -> Result<Self> {
        if features.nrows() != labels.len() {
            return Err(Error::DimensionMismatch {
                what: "dataset labels",
                expected: features.nrows(),
                got: labels.len(),
            });
        }
        if let Some(&bad) = labels.iter().find(|&&y| y >= n_classes) {
            return Err(Error::LabelOutOfRange {
                label: bad,
                classes: n_classes,
            });
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("dataset features"));
        }
        Ok(Self {
            name: name.into(),
            split,
            features,
            labels,
            n_classes,
        })
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    /// Features and labels of the given rows, in that order.
    pub fn batch(&self, rows: &[usize]) -> (Array2<f64>, Vec<usize>) {
        (
            self.features.select(Axis(0), rows),
            rows.iter().map(|&i| self.labels[i]).collect(),
        )
    }

    /// Keeps samples whose label is in `classes`, relabelled to positions in
    /// `classes`.
    pub fn restrict_classes(&self, classes: &[usize]) -> Result<Self> {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for (i, &y) in self.labels.iter().enumerate() {
            if let Some(pos) = classes.iter().position(|&c| c == y) {
                rows.push(i);
                labels.push(pos);
            }
        }
        Self::new(
            self.name.clone(),
            self.split,
            self.features.select(Axis(0), &rows),
            labels,
            classes.len(),
        )
    }

    /// Same samples with the labels replaced by a permutation of themselves.
    pub fn with_labels(&self, labels: Vec<usize>) -> Result<Self> {
        Self::new(
            self.name.clone(),
            self.split,
            self.features.clone(),
            labels,
            self.n_classes,
        )
    }
}
