use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::StandardNormal;

use super::config::GeneratorConfig;
use super::planted::PlantedTruth;
use crate::error::Result;
use crate::nn::{predict, SoftTargets};
use crate::rng::{self, StreamRng};
use crate::train::{Dataset, Split};

#[derive(Debug, Clone)]
pub struct VectorData {
    pub train: Dataset,
    pub test: Dataset,
    /// Single-concept samples labelled by object concept.
    pub aux: Dataset,
    /// Teacher codes for each training row.
    pub soft_targets: SoftTargets,
}

/// Event samples are `concentration * A z + sigma * eps` where `z` marks
/// the object concepts present: each signature concept of the event with
/// probability `signature_rate` (at least one), plus, with probability
/// `confusion`, one concept of another event.
pub fn gen_vector_dataset(config: &GeneratorConfig, truth: &PlantedTruth) -> Result<VectorData> {
    config.validate()?;
    let mut rng = rng::stream(config.seed, "vectors-train", 0);
    let train = event_samples(config, truth, config.n_train, Split::Train, &mut rng)?;
    let mut rng = rng::stream(config.seed, "vectors-test", 0);
    let test = event_samples(config, truth, config.n_test, Split::Test, &mut rng)?;
    let aux = gen_concept_dataset(config, truth, config.n_aux, "aux")?;
    let soft_targets = teacher_codes(truth, &train)?;
    Ok(VectorData {
        train,
        test,
        aux,
        soft_targets,
    })
}

/// `n` samples showing exactly one object concept each, cycling through
/// the concepts, drawn from the stream named `tag`.
pub fn gen_concept_dataset(
    config: &GeneratorConfig,
    truth: &PlantedTruth,
    n: usize,
    tag: &str,
) -> Result<Dataset> {
    let mut rng = rng::stream(config.seed, tag, 0);
    let c = config.n_objects;
    let mut x = Array2::zeros((n, config.feature_dim));
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let mut z = Array1::zeros(c);
        z[i % c] = 1.0;
        x.row_mut(i).assign(&features(config, truth, &z, &mut rng));
        labels.push(i % c);
    }
    Dataset::new(tag, Split::Train, x, labels, c)
}

/// The frozen teacher's concept distribution for every row.
pub fn teacher_codes(truth: &PlantedTruth, data: &Dataset) -> Result<SoftTargets> {
    let t = &truth.teacher;
    SoftTargets::new(predict(&t.config, &t.params, data.features().view(), 0)?)
}

fn event_samples(
    config: &GeneratorConfig,
    truth: &PlantedTruth,
    n: usize,
    split: Split,
    rng: &mut StreamRng,
) -> Result<Dataset> {
    let m = config.n_events;
    let mut x = Array2::zeros((n, config.feature_dim));
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let y = i % m;
        let sig = &truth.object_signatures[y];
        let mut z = Array1::<f64>::zeros(config.n_objects);
        for &c in sig {
            if rng.random::<f64>() < config.signature_rate {
                z[c] = 1.0;
            }
        }
        if z.sum() == 0.0 {
            z[sig[rng.random_range(0..sig.len())]] = 1.0;
        }
        if m > 1 && rng.random::<f64>() < config.confusion {
            let other = &truth.object_signatures[(y + rng.random_range(1..m)) % m];
            z[other[rng.random_range(0..other.len())]] = 1.0;
        }
        x.row_mut(i).assign(&features(config, truth, &z, rng));
        labels.push(y);
    }
    let name = match split {
        Split::Train => "vectors-train",
        Split::Test => "vectors-test",
    };
    Dataset::new(name, split, x, labels, m)
}

fn features(
    config: &GeneratorConfig,
    truth: &PlantedTruth,
    z: &Array1<f64>,
    rng: &mut StreamRng,
) -> Array1<f64> {
    let mut x = truth.patterns.dot(z) * config.concentration;
    for v in x.iter_mut() {
        *v += config.noise_sigma * rng.sample::<f64, _>(StandardNormal);
    }
    x
}
