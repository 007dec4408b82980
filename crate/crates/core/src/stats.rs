//! Concept-response statistics.
//!
//! Everything here is derived from per-image response distributions over
//! concept classes (objects or scenes): the per-event conditional `p(c|e)`,
//! the event prior `p(e)`, concept marginals `p(c)`, the Bayes posterior
//! `p(e|c)`, and its conditional entropy in bits.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for simplex checks on externally supplied scores.
pub const INGEST_SIMPLEX_TOL: f64 = 1e-6;
/// Tolerance for simplex checks on tables this crate produced itself.
pub const INTERNAL_SIMPLEX_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ConceptKind {
    #[default]
    Object,
    Scene,
}

impl std::str::FromStr for ConceptKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "object" => Ok(ConceptKind::Object),
            "scene" => Ok(ConceptKind::Scene),
            other => Err(Error::InvalidConfig(format!("unknown concept kind {other:?}"))),
        }
    }
}

/// Per-image concept-response distributions, one simplex row per image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseMatrix {
    #[serde(with = "crate::io::matrix")]
    values: Array2<f64>,
    class_ids: Vec<String>,
    kind: ConceptKind,
}

impl ResponseMatrix {
    pub fn new(values: Array2<f64>, class_ids: Vec<String>, kind: ConceptKind) -> Result<Self> {
        if class_ids.len() != values.ncols() {
            return Err(Error::DimensionMismatch {
                what: "response class ids",
                expected: values.ncols(),
                got: class_ids.len(),
            });
        }
        for (i, row) in values.rows().into_iter().enumerate() {
            check_simplex(&row.to_vec(), INGEST_SIMPLEX_TOL)
                .map_err(|_| Error::Unnormalized {
                    row: i,
                    sum: row.sum(),
                })?;
        }
        Ok(Self {
            values,
            class_ids,
            kind,
        })
    }

    /// Builds the matrix with generic `class_<j>` identifiers.
    pub fn with_default_ids(values: Array2<f64>, kind: ConceptKind) -> Result<Self> {
        let ids = (0..values.ncols()).map(|j| format!("class_{j}")).collect();
        Self::new(values, ids, kind)
    }

    /// Aggregates per-image crop scores into image-level responses.
    pub fn from_crop_scores(
        crops_per_image: &[Array2<f64>],
        class_ids: Vec<String>,
        kind: ConceptKind,
    ) -> Result<Self> {
        let c = class_ids.len();
        let mut values = Array2::zeros((crops_per_image.len(), c));
        for (i, crops) in crops_per_image.iter().enumerate() {
            let row = aggregate_crop_scores(crops.view())?;
            if row.len() != c {
                return Err(Error::DimensionMismatch {
                    what: "crop score width",
                    expected: c,
                    got: row.len(),
                });
            }
            values.row_mut(i).assign(&row);
        }
        Self::new(values, class_ids, kind)
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn class_ids(&self) -> &[String] {
        &self.class_ids
    }

    pub fn kind(&self) -> ConceptKind {
        self.kind
    }

    pub fn n_images(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_classes(&self) -> usize {
        self.values.ncols()
    }

    /// Rows restricted to the given image indices, in that order.
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        Self {
            values: self.values.select(Axis(0), rows),
            class_ids: self.class_ids.clone(),
            kind: self.kind,
        }
    }

    /// Row-wise l2-normalized copy, used as probe features.
    pub fn l2_normalized_features(&self) -> Result<Array2<f64>> {
        let mut out = self.values.clone();
        for mut row in out.rows_mut() {
            let v = l2_normalize(&row.to_vec())?;
            row.assign(&Array1::from(v));
        }
        Ok(out)
    }
}

/// Event label per image plus the number of event classes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventLabels {
    labels: Vec<usize>,
    n_events: usize,
}

impl EventLabels {
    pub fn new(labels: Vec<usize>, n_events: usize) -> Result<Self> {
        if let Some(&bad) = labels.iter().find(|&&y| y >= n_events) {
            return Err(Error::LabelOutOfRange {
                label: bad,
                classes: n_events,
            });
        }
        Ok(Self { labels, n_events })
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn n_events(&self) -> usize {
        self.n_events
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_events];
        for &y in &self.labels {
            counts[y] += 1;
        }
        counts
    }

    pub fn select(&self, rows: &[usize]) -> Self {
        Self {
            labels: rows.iter().map(|&i| self.labels[i]).collect(),
            n_events: self.n_events,
        }
    }
}

/// `p(concept|event)` (concepts x events), the event prior and the counts
/// it was estimated from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalTable {
    #[serde(with = "crate::io::matrix")]
    cond: Array2<f64>,
    prior: Vec<f64>,
    counts: Vec<usize>,
    total: usize,
}

impl ConditionalTable {
    /// Assembles a table from externally supplied parts; the prior is
    /// recomputed from the counts.
    pub fn from_parts(cond: Array2<f64>, counts: Vec<usize>) -> Result<Self> {
        if cond.ncols() != counts.len() {
            return Err(Error::DimensionMismatch {
                what: "conditional table events",
                expected: cond.ncols(),
                got: counts.len(),
            });
        }
        if let Some(e) = counts.iter().position(|&n| n == 0) {
            return Err(Error::EmptyEventClass(e));
        }
        for (e, col) in cond.columns().into_iter().enumerate() {
            check_simplex(&col.to_vec(), INGEST_SIMPLEX_TOL).map_err(|_| {
                Error::InvalidDistribution(format!(
                    "column {e} of p(concept|event) sums to {}",
                    col.sum()
                ))
            })?;
        }
        let total: usize = counts.iter().sum();
        let prior = counts.iter().map(|&n| n as f64 / total as f64).collect();
        Ok(Self {
            cond,
            prior,
            counts,
            total,
        })
    }

    /// Checks a deserialized table against its invariants.
    pub fn validate(&self) -> Result<()> {
        let rebuilt = Self::from_parts(self.cond.clone(), self.counts.clone())?;
        if rebuilt.total != self.total || rebuilt.prior != self.prior {
            return Err(Error::InvalidDistribution(
                "prior does not equal counts / total".into(),
            ));
        }
        Ok(())
    }

    pub fn cond(&self) -> &Array2<f64> {
        &self.cond
    }

    pub fn prior(&self) -> &[f64] {
        &self.prior
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn n_classes(&self) -> usize {
        self.cond.nrows()
    }

    pub fn n_events(&self) -> usize {
        self.cond.ncols()
    }
}

/// `p(event|concept)` (concepts x events) with the concept marginal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorTable {
    #[serde(with = "crate::io::matrix")]
    post: Array2<f64>,
    marginal: Vec<f64>,
    undefined_mask: Vec<bool>,
}

impl PosteriorTable {
    /// Builds a posterior table directly from rows, e.g. for synthetic
    /// selection instances. Every row must lie on the simplex.
    pub fn from_rows(post: Array2<f64>, marginal: Vec<f64>) -> Result<Self> {
        if marginal.len() != post.nrows() {
            return Err(Error::DimensionMismatch {
                what: "posterior marginal",
                expected: post.nrows(),
                got: marginal.len(),
            });
        }
        for row in post.rows() {
            check_simplex(&row.to_vec(), INGEST_SIMPLEX_TOL)?;
        }
        let undefined_mask = marginal.iter().map(|&m| m == 0.0).collect();
        Ok(Self {
            post,
            marginal,
            undefined_mask,
        })
    }

    pub fn post(&self) -> &Array2<f64> {
        &self.post
    }

    pub fn row(&self, class: usize) -> &[f64] {
        // rows of a standard-layout Array2 are contiguous
        let m = self.post.ncols();
        &self.post.as_slice().expect("standard layout")[class * m..(class + 1) * m]
    }

    pub fn marginal(&self) -> &[f64] {
        &self.marginal
    }

    pub fn undefined_mask(&self) -> &[bool] {
        &self.undefined_mask
    }

    pub fn n_classes(&self) -> usize {
        self.post.nrows()
    }

    pub fn n_events(&self) -> usize {
        self.post.ncols()
    }

    /// Conditional entropy of every row, in bits.
    pub fn entropies(&self) -> Vec<f64> {
        (0..self.n_classes())
            .map(|o| conditional_entropy(self.row(o)).expect("posterior rows are distributions"))
            .collect()
    }
}

/// Mean of per-crop score rows.
pub fn aggregate_crop_scores(crop_scores: ArrayView2<'_, f64>) -> Result<Array1<f64>> {
    if crop_scores.nrows() == 0 {
        return Err(Error::NoCrops);
    }
    for (i, row) in crop_scores.rows().into_iter().enumerate() {
        check_simplex(&row.to_vec(), INGEST_SIMPLEX_TOL).map_err(|_| Error::Unnormalized {
            row: i,
            sum: row.sum(),
        })?;
    }
    let mut acc = Array1::zeros(crop_scores.ncols());
    for row in crop_scores.rows() {
        acc += &row;
    }
    acc /= crop_scores.nrows() as f64;
    Ok(acc)
}

pub fn estimate_conditional(
    responses: &ResponseMatrix,
    labels: &EventLabels,
) -> Result<ConditionalTable> {
    if responses.n_images() != labels.len() {
        return Err(Error::DimensionMismatch {
            what: "labels vs response rows",
            expected: responses.n_images(),
            got: labels.len(),
        });
    }
    if labels.is_empty() {
        return Err(Error::EmptyDataset("no images".into()));
    }
    let m = labels.n_events();
    let counts = labels.counts();
    if let Some(e) = counts.iter().position(|&n| n == 0) {
        return Err(Error::EmptyEventClass(e));
    }
    let mut cond = Array2::<f64>::zeros((responses.n_classes(), m));
    for (row, &y) in responses.values().rows().into_iter().zip(labels.labels()) {
        let mut col = cond.column_mut(y);
        col += &row;
    }
    for (e, mut col) in cond.columns_mut().into_iter().enumerate() {
        col /= counts[e] as f64;
    }
    let total = labels.len();
    let prior = counts.iter().map(|&n| n as f64 / total as f64).collect();
    Ok(ConditionalTable {
        cond,
        prior,
        counts,
        total,
    })
}

/// Concept marginal `p(c) = sum_e p(c|e) p(e)`.
pub fn marginalize(table: &ConditionalTable) -> Vec<f64> {
    table
        .cond
        .rows()
        .into_iter()
        .map(|row| row.iter().zip(&table.prior).map(|(c, p)| c * p).sum())
        .collect()
}

/// Bayes posterior `p(e|c)`. Concepts with zero marginal get a uniform row
/// and are flagged in the mask.
pub fn bayes_posterior(table: &ConditionalTable) -> PosteriorTable {
    let marginal = marginalize(table);
    let (c, m) = table.cond.dim();
    let mut post = Array2::zeros((c, m));
    let mut undefined_mask = vec![false; c];
    for o in 0..c {
        if marginal[o] == 0.0 {
            post.row_mut(o).fill(1.0 / m as f64);
            undefined_mask[o] = true;
            continue;
        }
        for e in 0..m {
            post[[o, e]] = table.cond[[o, e]] * table.prior[e] / marginal[o];
        }
    }
    PosteriorTable {
        post,
        marginal,
        undefined_mask,
    }
}

/// Entropy of a distribution in bits, with `0 log 0 = 0`.
pub fn conditional_entropy(row: &[f64]) -> Result<f64> {
    if let Some(&p) = row.iter().find(|&&p| p < 0.0 || !p.is_finite()) {
        return Err(Error::InvalidDistribution(format!("entry {p}")));
    }
    let h: f64 = row
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.log2())
        .sum();
    // rounding can leave a one-hot row at -0.0 or a tiny negative
    Ok(h.max(0.0))
}

pub fn l2_normalize(v: &[f64]) -> Result<Vec<f64>> {
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("l2_normalize input"));
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Ok(v.to_vec());
    }
    Ok(v.iter().map(|x| x / norm).collect())
}

/// Checks that `row` is a probability vector within `tol`.
pub fn check_simplex(row: &[f64], tol: f64) -> Result<()> {
    if row.iter().any(|&p| !p.is_finite() || p < -tol) {
        return Err(Error::InvalidDistribution("negative or non-finite entry".into()));
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > tol {
        return Err(Error::InvalidDistribution(format!("sums to {sum}")));
    }
    Ok(())
}
