use std::time::Instant;

use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::config::{TransferConfig, TransferMode};
use super::dataset::Dataset;
use super::metrics::evaluate;
use crate::error::{Error, Result};
use crate::nn::{
    backward, cross_entropy_loss, data_loss, data_loss_gradient, forward, forward_with_mask,
    knowledge_loss, sgd_momentum_step, trunk_output, Checkpoint, Mode, NetworkConfig, NormConfig,
    NormStats, SoftTargets, EVENT_HEAD,
};
use crate::rng::{self, StreamRng};

/// Metrics recorded at one evaluation point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalPoint {
    pub iteration: usize,
    /// Event cross-entropy over the whole training set, eval mode.
    pub train_loss: f64,
    pub test_loss: f64,
    pub test_acc: f64,
    pub test_map: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub mode: TransferMode,
    pub seed: u64,
    pub iterations: usize,
    pub points: Vec<EvalPoint>,
    pub wall_clock_secs: f64,
    /// Where the final checkpoint was written, when it was.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoint: Option<String>,
}

impl TrainReport {
    pub fn final_point(&self) -> &EvalPoint {
        self.points.last().expect("a report always has the initial point")
    }

    /// Test loss minus train loss at the last evaluation.
    pub fn generalization_gap(&self) -> f64 {
        let p = self.final_point();
        p.test_loss - p.train_loss
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub report: TrainReport,
    pub checkpoint: Checkpoint,
}

/// The second objective, if any.
#[derive(Debug, Clone, Copy)]
pub enum AuxTask<'a> {
    None,
    /// Soft codes aligned row for row with the training set.
    Soft(&'a SoftTargets),
    /// A second labelled dataset sharing the trunk.
    Data(&'a Dataset),
}

/// Walks a dataset in shuffled epochs; each batch continues where the last
/// one stopped.
struct BatchSampler {
    order: Vec<usize>,
    pos: usize,
    batch: usize,
    rng: StreamRng,
}

impl BatchSampler {
    fn new(n: usize, batch: usize, rng: StreamRng) -> Self {
        Self {
            order: (0..n).collect(),
            pos: n,
            batch: batch.min(n),
            rng,
        }
    }

    fn next_batch(&mut self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.batch);
        while out.len() < self.batch {
            if self.pos == self.order.len() {
                self.order.shuffle(&mut self.rng);
                self.pos = 0;
            }
            let take = (self.batch - out.len()).min(self.order.len() - self.pos);
            out.extend_from_slice(&self.order[self.pos..self.pos + take]);
            self.pos += take;
        }
        out
    }
}

pub fn init_transfer_train(
    source: &Checkpoint,
    train: &Dataset,
    test: &Dataset,
    config: &TransferConfig,
) -> Result<TrainOutcome> {
    train_with_observer(source, train, test, AuxTask::None, config, &mut |_, _| {})
}

pub fn knowledge_transfer_train(
    source: &Checkpoint,
    train: &Dataset,
    test: &Dataset,
    targets: &SoftTargets,
    config: &TransferConfig,
) -> Result<TrainOutcome> {
    train_with_observer(source, train, test, AuxTask::Soft(targets), config, &mut |_, _| {})
}

pub fn data_transfer_train(
    source: &Checkpoint,
    train: &Dataset,
    test: &Dataset,
    aux: &Dataset,
    config: &TransferConfig,
) -> Result<TrainOutcome> {
    train_with_observer(source, train, test, AuxTask::Data(aux), config, &mut |_, _| {})
}

/// Builds the target network from `source` and trains it. `observer` sees
/// the checkpoint after every update, with the number of updates so far.
///
/// The auxiliary objective must match `config.mode`; init mode takes none.
pub fn train_with_observer(
    source: &Checkpoint,
    train: &Dataset,
    test: &Dataset,
    aux: AuxTask<'_>,
    config: &TransferConfig,
    observer: &mut dyn FnMut(usize, &Checkpoint),
) -> Result<TrainOutcome> {
    config.validate()?;
    source.validate()?;
    if train.is_empty() {
        return Err(Error::EmptyDataset("target training set".into()));
    }
    if test.is_empty() {
        return Err(Error::EmptyDataset("target test set".into()));
    }
    for (what, d) in [("training features", train), ("test features", test)] {
        if d.dim() != source.config.input_dim {
            return Err(Error::DimensionMismatch {
                what,
                expected: source.config.input_dim,
                got: d.dim(),
            });
        }
    }
    if test.n_classes() != train.n_classes() {
        return Err(Error::DimensionMismatch {
            what: "test classes",
            expected: train.n_classes(),
            got: test.n_classes(),
        });
    }
    let m = train.n_classes();
    let heads = match (config.mode, aux) {
        (TransferMode::Init, AuxTask::None) => vec![m],
        (TransferMode::Knowledge, AuxTask::Soft(t)) => {
            if t.len() < train.len() {
                return Err(Error::MissingSoftTarget(t.len()));
            }
            if t.len() > train.len() {
                return Err(Error::DimensionMismatch {
                    what: "soft target rows",
                    expected: train.len(),
                    got: t.len(),
                });
            }
            vec![m, t.width()]
        }
        (TransferMode::Data, AuxTask::Data(d)) => {
            if d.is_empty() {
                return Err(Error::EmptyDataset("auxiliary dataset".into()));
            }
            if d.dim() != source.config.input_dim {
                return Err(Error::DimensionMismatch {
                    what: "auxiliary features",
                    expected: source.config.input_dim,
                    got: d.dim(),
                });
            }
            vec![m, d.n_classes()]
        }
        (mode, _) => {
            return Err(Error::InvalidConfig(format!(
                "{mode} mode given a mismatched auxiliary objective"
            )))
        }
    };
    let start = source.transplant(heads, config.dropout_rate, config.seed)?;
    fit(start, train, test, aux, config, observer)
}

/// Softmax classifier directly on fixed, unit-length feature rows.
pub fn linear_probe_train(
    train: &Dataset,
    test: &Dataset,
    config: &TransferConfig,
) -> Result<TrainOutcome> {
    for (name, d) in [("train", train), ("test", test)] {
        for (i, row) in d.features().rows().into_iter().enumerate() {
            let norm = row.dot(&row).sqrt();
            if (norm - 1.0).abs() > 1e-6 {
                return Err(Error::InvalidDistribution(format!(
                    "{name} probe row {i} has norm {norm}, expected unit length"
                )));
            }
        }
    }
    let net = NetworkConfig::new(train.dim(), vec![], vec![train.n_classes()]);
    let start = Checkpoint::init(net, config.seed)?;
    let config = TransferConfig {
        mode: TransferMode::Init,
        dropout_rate: 0.0,
        ..config.clone()
    };
    train_with_observer(&start, train, test, AuxTask::None, &config, &mut |_, _| {})
}

/// Trains a fresh single-head network on a source dataset. With a norm
/// layer, training uses batch statistics and the result stores exact
/// statistics over the whole source set, frozen.
pub fn pretrain_source(
    train: &Dataset,
    test: &Dataset,
    hidden: Vec<usize>,
    norm: Option<NormConfig>,
    config: &TransferConfig,
) -> Result<TrainOutcome> {
    let net = NetworkConfig {
        norm: norm.map(|n| NormConfig { frozen: false, ..n }),
        ..NetworkConfig::new(train.dim(), hidden, vec![train.n_classes()])
    };
    let start = Checkpoint::init(net, config.seed)?;
    let config = TransferConfig {
        mode: TransferMode::Init,
        ..config.clone()
    };
    let mut outcome = train_with_observer(&start, train, test, AuxTask::None, &config, &mut |_, _| {})?;
    let ckpt = &mut outcome.checkpoint;
    if ckpt.config.norm.is_some() {
        let out = trunk_output(&ckpt.config, &ckpt.params, train.features().view())?;
        ckpt.params.norm_stats = Some(crate::nn::forward::column_stats(&out));
        if let Some(nc) = ckpt.config.norm.as_mut() {
            nc.frozen = true;
        }
    }
    Ok(outcome)
}

fn fit(
    mut ckpt: Checkpoint,
    train: &Dataset,
    test: &Dataset,
    aux: AuxTask<'_>,
    config: &TransferConfig,
    observer: &mut dyn FnMut(usize, &Checkpoint),
) -> Result<TrainOutcome> {
    let clock = Instant::now();
    let total = config.schedule.total_iterations();
    let mut velocity = vec![0.0; ckpt.params.len()];
    let mut target_batches = BatchSampler::new(
        train.len(),
        config.batch_size,
        rng::stream(config.seed, "target-batches", 0),
    );
    let mut dropout_rng = rng::stream(config.seed, "dropout", 0);
    let mut aux_state = match aux {
        AuxTask::Data(d) if config.beta > 0.0 => Some((
            d,
            BatchSampler::new(
                d.len(),
                config.batch_size,
                rng::stream(config.seed, "aux-batches", 0),
            ),
            rng::stream(config.seed, "aux-dropout", 0),
        )),
        _ => None,
    };

    let mut points = vec![evaluation_point(&ckpt, train, test, 0)?];
    for iter in 0..total {
        let rows = target_batches.next_batch();
        let (x, y) = train.batch(&rows);
        let cache = forward(&ckpt.config, &ckpt.params, x.view(), Mode::Train, &mut dropout_rng)?;
        let mut batch_stats: Vec<NormStats> = cache.batch_norm_stats().into_iter().cloned().collect();
        let (loss, grad) = match (aux, aux_state.as_mut()) {
            (AuxTask::Soft(targets), _) => {
                let t = targets.rows().select(Axis(0), &rows);
                let out = knowledge_loss(&cache, &y, t.view(), config.alpha, config.soft_direction)?;
                let g = backward(&ckpt.config, &ckpt.params, &cache, &out.head_grads)?;
                (out.loss, g)
            }
            (AuxTask::Data(_), Some((d, sampler, aux_rng))) => {
                let (ax, ay) = d.batch(&sampler.next_batch());
                let aux_cache =
                    forward(&ckpt.config, &ckpt.params, ax.view(), Mode::Train, aux_rng)?;
                batch_stats.extend(aux_cache.batch_norm_stats().cloned());
                let out = data_loss(&cache, &y, &aux_cache, &ay, config.beta)?;
                let g = data_loss_gradient(&ckpt.config, &ckpt.params, &cache, &aux_cache, &out)?;
                (out.loss, g)
            }
            _ => {
                let (loss, g) = cross_entropy_loss(&cache, EVENT_HEAD, &y)?;
                let mut head_grads = vec![None; ckpt.config.n_heads()];
                head_grads[EVENT_HEAD] = Some(g);
                (loss, backward(&ckpt.config, &ckpt.params, &cache, &head_grads)?)
            }
        };
        if !loss.is_finite() {
            return Err(Error::Divergence { iteration: iter });
        }
        let lr = config.schedule.lr_at(iter);
        sgd_momentum_step(&mut ckpt.params.values, &grad, &mut velocity, lr, config.momentum)
            .map_err(|_| Error::Divergence { iteration: iter })?;
        if let Some(stored) = ckpt.params.norm_stats.as_mut() {
            for s in &batch_stats {
                blend_stats(stored, s, config.norm_momentum);
            }
        }
        observer(iter + 1, &ckpt);

        let done = iter + 1;
        if done % config.eval_every == 0 || done == total {
            let point = evaluation_point(&ckpt, train, test, done)?;
            log::debug!(
                "iter {done}: train {:.4} test {:.4} acc {:.3}",
                point.train_loss,
                point.test_loss,
                point.test_acc
            );
            points.push(point);
        }
    }
    let report = TrainReport {
        mode: config.mode,
        seed: config.seed,
        iterations: total,
        points,
        wall_clock_secs: clock.elapsed().as_secs_f64(),
        checkpoint: None,
    };
    Ok(TrainOutcome {
        report,
        checkpoint: ckpt,
    })
}

fn blend_stats(stored: &mut NormStats, batch: &NormStats, rate: f64) {
    for (s, b) in stored.mean.iter_mut().zip(&batch.mean) {
        *s += rate * (b - *s);
    }
    for (s, b) in stored.var.iter_mut().zip(&batch.var) {
        *s += rate * (b - *s);
    }
}

/// Event-head probabilities for every row of `data`, eval mode.
pub fn event_scores(ckpt: &Checkpoint, data: &Dataset) -> Result<Array2<f64>> {
    let cache = forward_with_mask(
        &ckpt.config,
        &ckpt.params,
        data.features().view(),
        Mode::Eval,
        None,
    )?;
    Ok(cache.probs[EVENT_HEAD].clone())
}

fn mean_event_loss(ckpt: &Checkpoint, data: &Dataset) -> Result<(f64, Array2<f64>)> {
    let cache = forward_with_mask(
        &ckpt.config,
        &ckpt.params,
        data.features().view(),
        Mode::Eval,
        None,
    )?;
    let (loss, _) = cross_entropy_loss(&cache, EVENT_HEAD, data.labels())?;
    let probs = cache.probs.into_iter().next().expect("event head");
    Ok((loss, probs))
}

fn evaluation_point(
    ckpt: &Checkpoint,
    train: &Dataset,
    test: &Dataset,
    iteration: usize,
) -> Result<EvalPoint> {
    let (train_loss, _) = mean_event_loss(ckpt, train)?;
    let (test_loss, probs) = mean_event_loss(ckpt, test)?;
    let eval = evaluate(probs.view(), test.labels())?;
    let point = EvalPoint {
        iteration,
        train_loss,
        test_loss,
        test_acc: eval.accuracy,
        test_map: eval.map,
    };
    if [train_loss, test_loss, eval.accuracy, eval.map]
        .iter()
        .any(|v| !v.is_finite())
    {
        return Err(Error::Divergence { iteration });
    }
    Ok(point)
}
