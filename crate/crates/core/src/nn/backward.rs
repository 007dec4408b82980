use ndarray::{Array2, Axis};

use super::config::NetworkConfig;
use super::forward::ForwardCache;
use super::loss::DataLossOutput;
use super::params::ParamStore;
use crate::error::{Error, Result};

/// Exact gradient of a loss with respect to every parameter, in the
/// [`ParamStore`] layout. `head_grads[h]` is the loss gradient with respect
/// to head `h`'s logits; heads given `None` receive a zero gradient.
///
/// `cache` must come from a forward pass with these same parameters.
pub fn backward(
    config: &NetworkConfig,
    params: &ParamStore,
    cache: &ForwardCache,
    head_grads: &[Option<Array2<f64>>],
) -> Result<Vec<f64>> {
    if head_grads.len() != config.n_heads() {
        return Err(Error::DimensionMismatch {
            what: "head gradients",
            expected: config.n_heads(),
            got: head_grads.len(),
        });
    }
    let mut grad = vec![0.0; params.len()];
    let n_trunk = config.hidden.len();
    let mut d_features = Array2::<f64>::zeros(cache.features.dim());

    for (h, g) in head_grads.iter().enumerate() {
        let Some(g) = g else { continue };
        if g.dim() != cache.logits[h].dim() {
            return Err(Error::DimensionMismatch {
                what: "head gradient shape",
                expected: cache.logits[h].ncols(),
                got: g.ncols(),
            });
        }
        let w_entry = &params.layout[2 * n_trunk + 2 * h];
        let b_entry = &params.layout[2 * n_trunk + 2 * h + 1];
        let gw = g.t().dot(&cache.features);
        grad[w_entry.range()].copy_from_slice(gw.as_slice().expect("owned dot result"));
        let gb = g.sum_axis(Axis(0));
        grad[b_entry.range()].copy_from_slice(gb.as_slice().expect("owned sum"));
        d_features = d_features + g.dot(&params.head_weight(h));
    }

    let mut d = match &cache.dropout_mask {
        Some(mask) => d_features * mask,
        None => d_features,
    };

    if let Some(norm) = &cache.norm {
        let n = d.nrows() as f64;
        if norm.batch_stats.is_some() {
            // standardization with batch statistics couples the rows
            let mean_d = d.sum_axis(Axis(0)).mapv(|s| s / n);
            let mean_dx = (&d * &norm.xhat).sum_axis(Axis(0)).mapv(|s| s / n);
            for (mut row, xrow) in d.rows_mut().into_iter().zip(norm.xhat.rows()) {
                for j in 0..row.len() {
                    row[j] = (row[j] - mean_d[j] - xrow[j] * mean_dx[j]) / norm.std[j];
                }
            }
        } else {
            for mut row in d.rows_mut() {
                for (j, v) in row.iter_mut().enumerate() {
                    *v /= norm.std[j];
                }
            }
        }
    }

    for l in (0..n_trunk).rev() {
        let mut dz = d;
        dz.zip_mut_with(&cache.pre[l], |g, &z| {
            if z <= 0.0 {
                *g = 0.0;
            }
        });
        let input = if l == 0 {
            cache.inputs.view()
        } else {
            cache.acts[l - 1].view()
        };
        let gw = dz.t().dot(&input);
        grad[params.layout[2 * l].range()].copy_from_slice(gw.as_slice().expect("owned dot result"));
        let gb = dz.sum_axis(Axis(0));
        grad[params.layout[2 * l + 1].range()].copy_from_slice(gb.as_slice().expect("owned sum"));
        d = dz.dot(&params.trunk_weight(l));
    }
    Ok(grad)
}

/// Parameter gradient of a two-dataset loss: event branch first, then the
/// auxiliary branch added on top. Trunk gradients sum; each head only sees
/// its own branch.
pub fn data_loss_gradient(
    config: &NetworkConfig,
    params: &ParamStore,
    event_cache: &ForwardCache,
    aux_cache: &ForwardCache,
    loss: &DataLossOutput,
) -> Result<Vec<f64>> {
    let mut grad = backward(config, params, event_cache, &loss.event_grads)?;
    let aux = backward(config, params, aux_cache, &loss.aux_grads)?;
    for (g, a) in grad.iter_mut().zip(aux) {
        *g += a;
    }
    Ok(grad)
}
