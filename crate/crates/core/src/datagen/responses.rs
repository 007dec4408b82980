use ndarray::Array2;
use rand::Rng;
use rand_distr::StandardNormal;

use super::config::GeneratorConfig;
use super::planted::PlantedTruth;
use crate::error::Result;
use crate::rng::{self, StreamRng};
use crate::stats::{ConceptKind, EventLabels, ResponseMatrix};

/// Object and scene responses for `n_train + n_test` images; the first
/// `n_train` rows form the training split.
#[derive(Debug, Clone)]
pub struct ResponseData {
    pub image_ids: Vec<String>,
    pub object: ResponseMatrix,
    pub scene: ResponseMatrix,
    pub labels: EventLabels,
    pub truth: PlantedTruth,
    pub n_train: usize,
}

impl ResponseData {
    /// Rows `[0, n_train)` and `[n_train, N)` as two independent sets.
    pub fn split(&self) -> (ResponseData, ResponseData) {
        let part = |rows: Vec<usize>| ResponseData {
            image_ids: rows.iter().map(|&i| self.image_ids[i].clone()).collect(),
            object: self.object.select_rows(&rows),
            scene: self.scene.select_rows(&rows),
            labels: self.labels.select(&rows),
            truth: self.truth.clone(),
            n_train: rows.len(),
        };
        let n = self.labels.len();
        (
            part((0..self.n_train).collect()),
            part((self.n_train..n).collect()),
        )
    }
}

/// Labels cycle through the events so every split is balanced.
pub fn gen_response_data(config: &GeneratorConfig) -> Result<ResponseData> {
    let truth = PlantedTruth::plant(config)?;
    let n = config.n_train + config.n_test;
    let labels: Vec<usize> = (0..n).map(|i| i % config.n_events).collect();
    let mut rng = rng::stream(config.seed, "responses", 0);
    let object = response_rows(config, &truth.object_signatures, config.n_objects, &labels, &mut rng);
    let scene = response_rows(config, &truth.scene_signatures, config.n_scenes, &labels, &mut rng);
    Ok(ResponseData {
        image_ids: (0..n).map(|i| format!("img_{i:05}")).collect(),
        object: ResponseMatrix::with_default_ids(object, ConceptKind::Object)?,
        scene: ResponseMatrix::with_default_ids(scene, ConceptKind::Scene)?,
        labels: EventLabels::new(labels, config.n_events)?,
        truth,
        n_train: config.n_train,
    })
}

/// `concentration * s + exp(sigma * eps) / C`, renormalized, where `s` is
/// uniform over the signature of the image's event (or, with probability
/// `confusion`, of another event).
fn response_rows(
    config: &GeneratorConfig,
    signatures: &[Vec<usize>],
    n_concepts: usize,
    labels: &[usize],
    rng: &mut StreamRng,
) -> Array2<f64> {
    let m = config.n_events;
    let mut out = Array2::zeros((labels.len(), n_concepts));
    for (i, &y) in labels.iter().enumerate() {
        let mut event = y;
        if m > 1 && rng.random::<f64>() < config.confusion {
            event = (y + rng.random_range(1..m)) % m;
        }
        let sig = &signatures[event];
        let peak = 1.0 / sig.len() as f64;
        let mut row = out.row_mut(i);
        if config.concentration.is_infinite() {
            for &c in sig {
                row[c] = peak;
            }
            continue;
        }
        for c in 0..n_concepts {
            let eps: f64 = rng.sample(StandardNormal);
            row[c] = (config.noise_sigma * eps).exp() / n_concepts as f64;
        }
        for &c in sig {
            row[c] += config.concentration * peak;
        }
        let total = row.sum();
        row.mapv_inplace(|v| v / total);
    }
    out
}
