//! Training objectives. All losses are batch means in nats; gradients are
//! with respect to head logits.

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use super::forward::ForwardCache;
use crate::error::{Error, Result};
use crate::stats::{check_simplex, INGEST_SIMPLEX_TOL};

/// Head carrying the event classifier.
pub const EVENT_HEAD: usize = 0;
/// Head carrying the imitation (knowledge) or auxiliary-dataset (data) task.
pub const AUX_HEAD: usize = 1;

/// Default soft-target weight with an object-model teacher.
pub const DEFAULT_ALPHA_OBJECT: f64 = 0.125;
/// Default soft-target weight with a scene-model teacher.
pub const DEFAULT_ALPHA_SCENE: f64 = 0.25;
/// Default auxiliary-dataset weight.
pub const DEFAULT_BETA: f64 = 0.5;

/// Lower clamp on teacher probabilities inside a logarithm.
const TARGET_FLOOR: f64 = 1e-12;

/// Teacher soft codes, one simplex row per training sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoftTargets {
    #[serde(with = "crate::io::matrix")]
    rows: Array2<f64>,
}

impl SoftTargets {
    pub fn new(rows: Array2<f64>) -> Result<Self> {
        for (i, row) in rows.rows().into_iter().enumerate() {
            check_simplex(&row.to_vec(), INGEST_SIMPLEX_TOL).map_err(|_| Error::Unnormalized {
                row: i,
                sum: row.sum(),
            })?;
        }
        Ok(Self { rows })
    }

    pub fn rows(&self) -> &Array2<f64> {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.nrows() == 0
    }

    pub fn width(&self) -> usize {
        self.rows.ncols()
    }

    /// Keeps the listed classes and renormalizes each row over them.
    pub fn restrict(&self, classes: &[usize]) -> Result<Self> {
        let mut out = Array2::zeros((self.len(), classes.len()));
        for (i, row) in self.rows.rows().into_iter().enumerate() {
            let total: f64 = classes.iter().map(|&c| row[c]).sum();
            if total <= 0.0 {
                return Err(Error::InvalidDistribution(format!(
                    "soft target row {i} has no mass on the kept classes"
                )));
            }
            for (k, &c) in classes.iter().enumerate() {
                out[[i, k]] = row[c] / total;
            }
        }
        Ok(Self { rows: out })
    }
}

/// Which distribution weights the log in the soft-target loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SoftDirection {
    /// `-sum_k f_k ln q_k`: the teacher output is the target distribution.
    #[default]
    TargetWeighted,
    /// `-sum_k q_k ln f_k`, gradient through the prediction only.
    PredictionWeighted,
}

impl std::str::FromStr for SoftDirection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "target_weighted" => Ok(SoftDirection::TargetWeighted),
            "prediction_weighted" => Ok(SoftDirection::PredictionWeighted),
            other => Err(Error::InvalidConfig(format!("unknown soft direction {other:?}"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct LossOutput {
    pub loss: f64,
    /// Per-head logit gradients; `None` for heads the loss does not touch.
    pub head_grads: Vec<Option<Array2<f64>>>,
}

#[derive(Debug, Clone)]
pub struct DataLossOutput {
    pub loss: f64,
    pub event_grads: Vec<Option<Array2<f64>>>,
    pub aux_grads: Vec<Option<Array2<f64>>>,
}

pub fn cross_entropy_loss(
    cache: &ForwardCache,
    head: usize,
    labels: &[usize],
) -> Result<(f64, Array2<f64>)> {
    let probs = head_output(&cache.probs, head)?;
    let log_probs = &cache.log_probs[head];
    let (batch, classes) = probs.dim();
    if labels.len() != batch {
        return Err(Error::DimensionMismatch {
            what: "labels vs batch",
            expected: batch,
            got: labels.len(),
        });
    }
    let mut loss = 0.0;
    let mut grad = probs.clone();
    for (i, &y) in labels.iter().enumerate() {
        if y >= classes {
            return Err(Error::LabelOutOfRange {
                label: y,
                classes,
            });
        }
        loss -= log_probs[[i, y]];
        grad[[i, y]] -= 1.0;
    }
    let n = batch as f64;
    grad /= n;
    Ok((loss / n, grad))
}

pub fn soft_target_loss(
    cache: &ForwardCache,
    head: usize,
    targets: ArrayView2<'_, f64>,
    direction: SoftDirection,
) -> Result<(f64, Array2<f64>)> {
    let q = head_output(&cache.probs, head)?;
    let log_q = &cache.log_probs[head];
    if targets.dim() != q.dim() {
        return Err(Error::DimensionMismatch {
            what: "soft targets vs imitation head",
            expected: q.ncols(),
            got: targets.ncols(),
        });
    }
    for (i, row) in targets.rows().into_iter().enumerate() {
        check_simplex(&row.to_vec(), INGEST_SIMPLEX_TOL).map_err(|_| Error::Unnormalized {
            row: i,
            sum: row.sum(),
        })?;
    }
    let n = q.nrows() as f64;
    let mut loss = 0.0;
    let mut grad = Array2::zeros(q.dim());
    for i in 0..q.nrows() {
        match direction {
            SoftDirection::TargetWeighted => {
                let mass: f64 = targets.row(i).sum();
                for k in 0..q.ncols() {
                    let f = targets[[i, k]];
                    loss -= f * log_q[[i, k]];
                    // equals q - f when the row sums to exactly one
                    grad[[i, k]] = q[[i, k]] * mass - f;
                }
            }
            SoftDirection::PredictionWeighted => {
                let cost: Vec<f64> = targets
                    .row(i)
                    .iter()
                    .map(|&f| -f.max(TARGET_FLOOR).ln())
                    .collect();
                let expected: f64 = (0..q.ncols()).map(|k| q[[i, k]] * cost[k]).sum();
                loss += expected;
                for k in 0..q.ncols() {
                    grad[[i, k]] = q[[i, k]] * (cost[k] - expected);
                }
            }
        }
    }
    grad /= n;
    Ok((loss / n, grad))
}

/// Event cross-entropy plus `alpha` times the soft-target loss on the
/// imitation head.
pub fn knowledge_loss(
    cache: &ForwardCache,
    labels: &[usize],
    targets: ArrayView2<'_, f64>,
    alpha: f64,
    direction: SoftDirection,
) -> Result<LossOutput> {
    check_weight("alpha", alpha)?;
    let (ce, ce_grad) = cross_entropy_loss(cache, EVENT_HEAD, labels)?;
    let mut head_grads = vec![None; cache.probs.len()];
    head_grads[EVENT_HEAD] = Some(ce_grad);
    if alpha == 0.0 {
        return Ok(LossOutput {
            loss: ce,
            head_grads,
        });
    }
    let (soft, mut soft_grad) = soft_target_loss(cache, AUX_HEAD, targets, direction)?;
    soft_grad *= alpha;
    head_grads[AUX_HEAD] = Some(soft_grad);
    Ok(LossOutput {
        loss: ce + alpha * soft,
        head_grads,
    })
}

/// Event cross-entropy on one batch plus `beta` times the auxiliary
/// cross-entropy on another batch, both through the same trunk.
pub fn data_loss(
    event_cache: &ForwardCache,
    event_labels: &[usize],
    aux_cache: &ForwardCache,
    aux_labels: &[usize],
    beta: f64,
) -> Result<DataLossOutput> {
    check_weight("beta", beta)?;
    if event_cache.trunk_digest != aux_cache.trunk_digest {
        return Err(Error::HeadsNotSharingTrunk);
    }
    let (ce, ce_grad) = cross_entropy_loss(event_cache, EVENT_HEAD, event_labels)?;
    let (aux, mut aux_grad) = cross_entropy_loss(aux_cache, AUX_HEAD, aux_labels)?;
    aux_grad *= beta;
    let heads = event_cache.probs.len();
    let mut event_grads = vec![None; heads];
    event_grads[EVENT_HEAD] = Some(ce_grad);
    let mut aux_grads = vec![None; heads];
    aux_grads[AUX_HEAD] = Some(aux_grad);
    Ok(DataLossOutput {
        loss: ce + beta * aux,
        event_grads,
        aux_grads,
    })
}

fn head_output(outputs: &[Array2<f64>], head: usize) -> Result<&Array2<f64>> {
    outputs
        .get(head)
        .ok_or_else(|| Error::InvalidConfig(format!("network has no head {head}")))
}

fn check_weight(name: &str, w: f64) -> Result<()> {
    if w >= 0.0 && w.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("{name} must be >= 0, got {w}")))
    }
}
