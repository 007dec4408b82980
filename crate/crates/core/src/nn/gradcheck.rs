//! Central finite-difference check of [`backward`].

use ndarray::{Array2, ArrayView2};
use rand::seq::index::sample;

use super::backward::{backward, data_loss_gradient};
use super::config::NetworkConfig;
use super::forward::{forward_with_mask, sample_dropout_mask, Mode};
use super::loss::{cross_entropy_loss, data_loss, knowledge_loss, SoftDirection, EVENT_HEAD};
use super::params::ParamStore;
use crate::error::Result;
use crate::rng;

/// Networks with more parameters than this are checked on a random subset
/// of this many coordinates.
const FULL_CHECK_LIMIT: usize = 400;

/// Denominator floor of the relative error. Central differences carry
/// roughly 1e-11 of rounding noise at epsilon 1e-5, which a smaller floor
/// would report as a large error on gradients that are exactly zero (for
/// example biases in front of batch standardization).
const RELATIVE_FLOOR: f64 = 1e-6;

pub enum LossSpec<'a> {
    CrossEntropy {
        inputs: ArrayView2<'a, f64>,
        labels: &'a [usize],
    },
    Knowledge {
        inputs: ArrayView2<'a, f64>,
        labels: &'a [usize],
        targets: ArrayView2<'a, f64>,
        alpha: f64,
        direction: SoftDirection,
    },
    Data {
        inputs: ArrayView2<'a, f64>,
        labels: &'a [usize],
        aux_inputs: ArrayView2<'a, f64>,
        aux_labels: &'a [usize],
        beta: f64,
    },
}

/// Dropout masks held fixed across every loss evaluation of one check.
struct FixedMasks {
    main: Option<Array2<f64>>,
    aux: Option<Array2<f64>>,
}

/// Max relative error `|g_a - g_n| / max(1e-6, |g_a| + |g_n|)` between the
/// analytic gradient and central differences. Dropout masks are drawn once
/// from `mask_seed` and reused for every evaluation.
pub fn grad_check(
    config: &NetworkConfig,
    params: &ParamStore,
    spec: &LossSpec<'_>,
    epsilon: f64,
    mask_seed: u64,
) -> Result<f64> {
    let masks = draw_masks(config, spec, mask_seed);
    let (_, analytic) = loss_and_grad(config, params, spec, &masks)?;

    let coords: Vec<usize> = if params.len() <= FULL_CHECK_LIMIT {
        (0..params.len()).collect()
    } else {
        let mut r = rng::stream(mask_seed, "gradcheck-coords", 0);
        let mut picked = sample(&mut r, params.len(), FULL_CHECK_LIMIT).into_vec();
        picked.sort_unstable();
        picked
    };

    let mut probe = params.clone();
    let mut worst: f64 = 0.0;
    for i in coords {
        let orig = probe.values[i];
        probe.values[i] = orig + epsilon;
        let plus = loss_only(config, &probe, spec, &masks)?;
        probe.values[i] = orig - epsilon;
        let minus = loss_only(config, &probe, spec, &masks)?;
        probe.values[i] = orig;
        let numeric = (plus - minus) / (2.0 * epsilon);
        let a = analytic[i];
        let rel = (a - numeric).abs() / (a.abs() + numeric.abs()).max(RELATIVE_FLOOR);
        worst = worst.max(rel);
    }
    Ok(worst)
}

fn draw_masks(config: &NetworkConfig, spec: &LossSpec<'_>, seed: u64) -> FixedMasks {
    if config.dropout_rate == 0.0 {
        return FixedMasks {
            main: None,
            aux: None,
        };
    }
    let mut r = rng::stream(seed, "gradcheck-mask", 0);
    let d = config.feature_dim();
    let (rows, aux_rows) = match spec {
        LossSpec::CrossEntropy { inputs, .. } | LossSpec::Knowledge { inputs, .. } => {
            (inputs.nrows(), None)
        }
        LossSpec::Data {
            inputs, aux_inputs, ..
        } => (inputs.nrows(), Some(aux_inputs.nrows())),
    };
    let main = Some(sample_dropout_mask(rows, d, config.dropout_rate, &mut r));
    let aux = aux_rows.map(|n| sample_dropout_mask(n, d, config.dropout_rate, &mut r));
    FixedMasks { main, aux }
}

fn loss_only(
    config: &NetworkConfig,
    params: &ParamStore,
    spec: &LossSpec<'_>,
    masks: &FixedMasks,
) -> Result<f64> {
    Ok(evaluate(config, params, spec, masks, false)?.0)
}

fn loss_and_grad(
    config: &NetworkConfig,
    params: &ParamStore,
    spec: &LossSpec<'_>,
    masks: &FixedMasks,
) -> Result<(f64, Vec<f64>)> {
    let (loss, grad) = evaluate(config, params, spec, masks, true)?;
    Ok((loss, grad.expect("gradient requested")))
}

fn evaluate(
    config: &NetworkConfig,
    params: &ParamStore,
    spec: &LossSpec<'_>,
    masks: &FixedMasks,
    with_grad: bool,
) -> Result<(f64, Option<Vec<f64>>)> {
    match spec {
        LossSpec::CrossEntropy { inputs, labels } => {
            let cache = forward_with_mask(config, params, *inputs, Mode::Train, masks.main.clone())?;
            let (loss, g) = cross_entropy_loss(&cache, EVENT_HEAD, labels)?;
            let grad = if with_grad {
                let mut hg = vec![None; config.n_heads()];
                hg[EVENT_HEAD] = Some(g);
                Some(backward(config, params, &cache, &hg)?)
            } else {
                None
            };
            Ok((loss, grad))
        }
        LossSpec::Knowledge {
            inputs,
            labels,
            targets,
            alpha,
            direction,
        } => {
            let cache = forward_with_mask(config, params, *inputs, Mode::Train, masks.main.clone())?;
            let out = knowledge_loss(&cache, labels, *targets, *alpha, *direction)?;
            let grad = if with_grad {
                Some(backward(config, params, &cache, &out.head_grads)?)
            } else {
                None
            };
            Ok((out.loss, grad))
        }
        LossSpec::Data {
            inputs,
            labels,
            aux_inputs,
            aux_labels,
            beta,
        } => {
            let ev = forward_with_mask(config, params, *inputs, Mode::Train, masks.main.clone())?;
            let aux = forward_with_mask(config, params, *aux_inputs, Mode::Train, masks.aux.clone())?;
            let out = data_loss(&ev, labels, &aux, aux_labels, *beta)?;
            let grad = if with_grad {
                Some(data_loss_gradient(config, params, &ev, &aux, &out)?)
            } else {
                None
            };
            Ok((out.loss, grad))
        }
    }
}
