use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::config::GeneratorConfig;
use crate::error::Result;
use crate::nn::{Checkpoint, NetworkConfig};
use crate::rng;

/// Ground truth behind every generated dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedTruth {
    /// Discriminative object concepts of each event; disjoint across events.
    pub object_signatures: Vec<Vec<usize>>,
    pub scene_signatures: Vec<Vec<usize>>,
    /// Feature direction of each object concept (`feature_dim x n_objects`).
    #[serde(with = "crate::io::matrix")]
    pub patterns: Array2<f64>,
    /// Frozen single-layer network mapping features to object concepts.
    pub teacher: Checkpoint,
}

impl PlantedTruth {
    pub fn plant(config: &GeneratorConfig) -> Result<Self> {
        config.validate()?;
        let object_signatures = signatures(config, config.n_objects, "object-signatures");
        let scene_signatures = signatures(config, config.n_scenes, "scene-signatures");

        let d = config.feature_dim;
        let mut rng = rng::stream(config.seed, "patterns", 0);
        let scale = 1.0 / (d as f64).sqrt();
        let patterns = Array2::from_shape_fn((d, config.n_objects), |_| {
            scale * rng.sample::<f64, _>(StandardNormal)
        });

        let net = NetworkConfig::new(d, vec![], vec![config.n_objects]);
        let mut teacher = Checkpoint::init(net, config.seed)?;
        let mut rng = rng::stream(config.seed, "teacher", 0);
        let w = teacher.params.head_range(0);
        let n_w = config.n_objects * d;
        for (k, v) in teacher.params.values[w].iter_mut().enumerate() {
            if k < n_w {
                let (c, j) = (k / d, k % d);
                let jitter: f64 = rng.sample(StandardNormal);
                *v = config.teacher_scale * (patterns[[j, c]] + 0.1 * scale * jitter);
            } else {
                *v = 0.0;
            }
        }
        Ok(Self {
            object_signatures,
            scene_signatures,
            patterns,
            teacher,
        })
    }

    /// Every planted signature concept of one stream, sorted.
    pub fn signature_set(signatures: &[Vec<usize>]) -> Vec<usize> {
        let mut all: Vec<usize> = signatures.iter().flatten().copied().collect();
        all.sort_unstable();
        all
    }
}

fn signatures(config: &GeneratorConfig, n_concepts: usize, tag: &str) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n_concepts).collect();
    order.shuffle(&mut rng::stream(config.seed, tag, 0));
    order
        .chunks(config.sparsity)
        .take(config.n_events)
        .map(|c| {
            let mut s = c.to_vec();
            s.sort_unstable();
            s
        })
        .collect()
}

/// Fraction of `planted` that appears in `selected`.
pub fn recovery_rate(selected: &[usize], planted: &[usize]) -> f64 {
    if planted.is_empty() {
        return 1.0;
    }
    let hit = planted.iter().filter(|c| selected.contains(c)).count();
    hit as f64 / planted.len() as f64
}
