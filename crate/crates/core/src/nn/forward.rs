use ndarray::{Array2, ArrayView2, Axis};
use rand::Rng;

use super::config::NetworkConfig;
use super::params::{NormStats, ParamStore};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

#[derive(Debug, Clone)]
pub(crate) struct NormCache {
    pub xhat: Array2<f64>,
    pub std: Vec<f64>,
    /// Present when the batch was standardized with its own statistics.
    pub batch_stats: Option<NormStats>,
}

/// Everything `backward` needs from one forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    pub(crate) inputs: Array2<f64>,
    pub(crate) pre: Vec<Array2<f64>>,
    pub(crate) acts: Vec<Array2<f64>>,
    pub(crate) norm: Option<NormCache>,
    pub(crate) dropout_mask: Option<Array2<f64>>,
    pub(crate) features: Array2<f64>,
    pub logits: Vec<Array2<f64>>,
    pub probs: Vec<Array2<f64>>,
    pub log_probs: Vec<Array2<f64>>,
    pub trunk_digest: u64,
}

impl ForwardCache {
    pub fn batch_size(&self) -> usize {
        self.inputs.nrows()
    }

    /// Batch statistics of the trunk output, when they were used.
    pub fn batch_norm_stats(&self) -> Option<&NormStats> {
        self.norm.as_ref().and_then(|n| n.batch_stats.as_ref())
    }

    pub fn dropout_mask(&self) -> Option<&Array2<f64>> {
        self.dropout_mask.as_ref()
    }
}

/// Forward pass. Dropout masks are drawn from `rng` only in train mode with
/// a nonzero rate; kept units are scaled by `1 / (1 - rate)`.
pub fn forward<R: Rng + ?Sized>(
    config: &NetworkConfig,
    params: &ParamStore,
    inputs: ArrayView2<'_, f64>,
    mode: Mode,
    rng: &mut R,
) -> Result<ForwardCache> {
    let mask = if mode == Mode::Train && config.dropout_rate > 0.0 {
        Some(sample_dropout_mask(
            inputs.nrows(),
            config.feature_dim(),
            config.dropout_rate,
            rng,
        ))
    } else {
        None
    };
    forward_with_mask(config, params, inputs, mode, mask)
}

pub fn sample_dropout_mask<R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    rate: f64,
    rng: &mut R,
) -> Array2<f64> {
    let keep = 1.0 - rate;
    let scale = 1.0 / keep;
    Array2::from_shape_fn((rows, cols), |_| {
        if rng.random::<f64>() < keep {
            scale
        } else {
            0.0
        }
    })
}

/// Forward pass with a caller-supplied dropout mask (`None` = no dropout).
pub fn forward_with_mask(
    config: &NetworkConfig,
    params: &ParamStore,
    inputs: ArrayView2<'_, f64>,
    mode: Mode,
    mask: Option<Array2<f64>>,
) -> Result<ForwardCache> {
    if inputs.ncols() != config.input_dim {
        return Err(Error::DimensionMismatch {
            what: "network input",
            expected: config.input_dim,
            got: inputs.ncols(),
        });
    }
    if params.n_heads() != config.n_heads() {
        return Err(Error::DimensionMismatch {
            what: "network heads",
            expected: config.n_heads(),
            got: params.n_heads(),
        });
    }
    let batch = inputs.nrows();
    let mut pre = Vec::with_capacity(config.hidden.len());
    let mut acts: Vec<Array2<f64>> = Vec::with_capacity(config.hidden.len());
    for l in 0..config.hidden.len() {
        let input = if l == 0 { inputs } else { acts[l - 1].view() };
        let z = affine(input, params.trunk_weight(l), params.trunk_bias(l));
        let a = z.mapv(|v| v.max(0.0));
        pre.push(z);
        acts.push(a);
    }
    let trunk_out = acts.last().cloned().unwrap_or_else(|| inputs.to_owned());

    let (normed, norm) = match &config.norm {
        None => (trunk_out, None),
        Some(nc) => {
            let use_batch = mode == Mode::Train && !nc.frozen;
            let stats = if use_batch {
                column_stats(&trunk_out)
            } else {
                params
                    .norm_stats
                    .clone()
                    .unwrap_or_else(|| NormStats::identity(config.feature_dim()))
            };
            let std: Vec<f64> = stats.var.iter().map(|v| (v + nc.eps).sqrt()).collect();
            let mut xhat = trunk_out;
            for mut row in xhat.rows_mut() {
                for (j, x) in row.iter_mut().enumerate() {
                    *x = (*x - stats.mean[j]) / std[j];
                }
            }
            let cache = NormCache {
                xhat: xhat.clone(),
                std,
                batch_stats: use_batch.then_some(stats),
            };
            (xhat, Some(cache))
        }
    };

    let features = match &mask {
        Some(m) => {
            if m.dim() != normed.dim() {
                return Err(Error::DimensionMismatch {
                    what: "dropout mask",
                    expected: normed.ncols(),
                    got: m.ncols(),
                });
            }
            &normed * m
        }
        None => normed,
    };

    let mut logits = Vec::with_capacity(config.n_heads());
    let mut probs = Vec::with_capacity(config.n_heads());
    let mut log_probs = Vec::with_capacity(config.n_heads());
    for h in 0..config.n_heads() {
        let z = affine(features.view(), params.head_weight(h), params.head_bias(h));
        let (p, lp) = softmax_rows(&z);
        logits.push(z);
        probs.push(p);
        log_probs.push(lp);
    }
    debug_assert_eq!(features.nrows(), batch);

    Ok(ForwardCache {
        inputs: inputs.to_owned(),
        pre,
        acts,
        norm,
        dropout_mask: mask,
        features,
        logits,
        probs,
        log_probs,
        trunk_digest: params.trunk_digest(),
    })
}

/// Class probabilities of one head in eval mode.
pub fn predict(
    config: &NetworkConfig,
    params: &ParamStore,
    inputs: ArrayView2<'_, f64>,
    head: usize,
) -> Result<Array2<f64>> {
    if head >= config.n_heads() {
        return Err(Error::InvalidConfig(format!("no head {head}")));
    }
    let mut cache = forward_with_mask(config, params, inputs, Mode::Eval, None)?;
    Ok(cache.probs.swap_remove(head))
}

/// Trunk output before standardization and dropout.
pub fn trunk_output(
    config: &NetworkConfig,
    params: &ParamStore,
    inputs: ArrayView2<'_, f64>,
) -> Result<Array2<f64>> {
    if inputs.ncols() != config.input_dim {
        return Err(Error::DimensionMismatch {
            what: "network input",
            expected: config.input_dim,
            got: inputs.ncols(),
        });
    }
    let mut a = inputs.to_owned();
    for l in 0..config.hidden.len() {
        a = affine(a.view(), params.trunk_weight(l), params.trunk_bias(l)).mapv(|v| v.max(0.0));
    }
    Ok(a)
}

fn affine(x: ArrayView2<'_, f64>, w: ArrayView2<'_, f64>, b: &[f64]) -> Array2<f64> {
    let mut z = x.dot(&w.t());
    for mut row in z.rows_mut() {
        for (v, bias) in row.iter_mut().zip(b) {
            *v += bias;
        }
    }
    z
}

/// Biased per-column mean and variance.
pub(crate) fn column_stats(x: &Array2<f64>) -> NormStats {
    let n = x.nrows() as f64;
    let mean = x.sum_axis(Axis(0)).mapv(|s| s / n);
    let mut var = vec![0.0; x.ncols()];
    for row in x.rows() {
        for (j, v) in row.iter().enumerate() {
            let d = v - mean[j];
            var[j] += d * d;
        }
    }
    var.iter_mut().for_each(|v| *v /= n);
    NormStats {
        mean: mean.to_vec(),
        var,
    }
}

/// Row-wise softmax and log-softmax via the max-shift.
pub fn softmax_rows(z: &Array2<f64>) -> (Array2<f64>, Array2<f64>) {
    let mut p = z.clone();
    let mut lp = z.clone();
    for (mut prow, mut lrow) in p.rows_mut().into_iter().zip(lp.rows_mut()) {
        let max = prow.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in prow.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        let log_sum = sum.ln();
        for v in prow.iter_mut() {
            *v /= sum;
        }
        for v in lrow.iter_mut() {
            *v = *v - max - log_sum;
        }
    }
    (p, lp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::config::NormConfig;
    use crate::rng;
    use ndarray::array;

    #[test]
    fn minimal_network_is_softmax_of_affine() {
        let config = NetworkConfig::new(2, vec![], vec![2]);
        let mut params = ParamStore::init(&config, 0).unwrap();
        params.values.copy_from_slice(&[1.0, 0.0, 0.0, 1.0, 0.5, -0.5]);
        let x = array![[1.0, 2.0]];
        let cache = forward_with_mask(&config, &params, x.view(), Mode::Eval, None).unwrap();
        let z = [1.5, 1.5];
        assert_eq!(cache.logits[0].row(0).to_vec(), z.to_vec());
        assert_eq!(cache.probs[0].row(0).to_vec(), vec![0.5, 0.5]);
    }

    #[test]
    fn zero_dropout_train_equals_eval() {
        let config = NetworkConfig::new(3, vec![5], vec![4]);
        let params = ParamStore::init(&config, 2).unwrap();
        let x = array![[0.1, -0.3, 2.0], [1.0, 0.5, -0.5]];
        let mut r = rng::stream(0, "t", 0);
        let a = forward(&config, &params, x.view(), Mode::Train, &mut r).unwrap();
        let b = forward(&config, &params, x.view(), Mode::Eval, &mut r).unwrap();
        assert_eq!(a.probs, b.probs);
    }

    #[test]
    fn seeded_runs_are_bitwise_identical() {
        let mut config = NetworkConfig::new(3, vec![6, 5], vec![4, 2]);
        config.dropout_rate = 0.5;
        let params = ParamStore::init(&config, 2).unwrap();
        let x = array![[0.1, -0.3, 2.0], [1.0, 0.5, -0.5]];
        let a = forward(&config, &params, x.view(), Mode::Train, &mut rng::stream(4, "d", 0)).unwrap();
        let b = forward(&config, &params, x.view(), Mode::Train, &mut rng::stream(4, "d", 0)).unwrap();
        assert_eq!(a.probs, b.probs);
        assert_eq!(a.dropout_mask, b.dropout_mask);
    }

    #[test]
    fn softmax_is_stable_and_normalized() {
        let z = array![[1000.0, -1000.0, 999.0], [-1000.0, -1000.0, -1000.0]];
        let (p, lp) = softmax_rows(&z);
        for row in p.rows() {
            assert!((row.sum() - 1.0).abs() < 1e-12);
        }
        assert!(lp.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn freeze_toggle_with_matching_stats_is_identity() {
        let mut config = NetworkConfig::new(3, vec![4], vec![2]);
        config.norm = Some(NormConfig {
            frozen: false,
            eps: 1e-5,
        });
        let mut params = ParamStore::init(&config, 5).unwrap();
        let x = array![[0.3, -0.1, 1.2], [1.0, 0.5, -0.5], [0.0, 2.0, 0.1]];
        let unfrozen = forward_with_mask(&config, &params, x.view(), Mode::Train, None).unwrap();
        params.norm_stats = unfrozen.batch_norm_stats().cloned();
        config.norm.as_mut().unwrap().frozen = true;
        let frozen = forward_with_mask(&config, &params, x.view(), Mode::Train, None).unwrap();
        assert_eq!(unfrozen.probs, frozen.probs);
    }

    #[test]
    fn input_width_is_checked() {
        let config = NetworkConfig::new(3, vec![4], vec![2]);
        let params = ParamStore::init(&config, 5).unwrap();
        let x = array![[0.3, -0.1]];
        assert!(forward_with_mask(&config, &params, x.view(), Mode::Eval, None).is_err());
    }
}
