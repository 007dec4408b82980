use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::config::GeneratorConfig;
use super::planted::PlantedTruth;
use crate::error::{Error, Result};
use crate::pipeline::{ImageBuffer, RegionScorer};
use crate::rng;

const BACKGROUND: f64 = 0.5;

/// Grey images, each with one square blob whose brightness encodes the class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageSet {
    pub images: Vec<ImageBuffer>,
    pub labels: Vec<usize>,
    pub n_classes: usize,
    /// `(top, left, side)` of each blob.
    pub blobs: Vec<(usize, usize, usize)>,
}

/// Blob brightness of each class, spaced evenly in `[0.65, 1.0]`.
pub fn class_levels(n_classes: usize) -> Vec<f64> {
    if n_classes == 1 {
        return vec![1.0];
    }
    (0..n_classes)
        .map(|k| 0.65 + 0.35 * k as f64 / (n_classes - 1) as f64)
        .collect()
}

/// `n_test` images of random size; background `0.5 + noise`, blob at a
/// uniform random position.
pub fn gen_image_dataset(config: &GeneratorConfig, _truth: &PlantedTruth) -> Result<ImageSet> {
    config.validate()?;
    let mut rng = rng::stream(config.seed, "images", 0);
    let levels = class_levels(config.n_events);
    let n = config.n_test;
    let mut out = ImageSet {
        images: Vec::with_capacity(n),
        labels: Vec::with_capacity(n),
        n_classes: config.n_events,
        blobs: Vec::with_capacity(n),
    };
    let b = config.blob_side;
    for i in 0..n {
        let y = i % config.n_events;
        let h = rng.random_range(config.image_min_side..=config.image_max_side);
        let w = rng.random_range(config.image_min_side..=config.image_max_side);
        let top = rng.random_range(0..=h - b);
        let left = rng.random_range(0..=w - b);
        let mut data = Vec::with_capacity(h * w);
        for r in 0..h {
            for c in 0..w {
                let inside = (top..top + b).contains(&r) && (left..left + b).contains(&c);
                let base = if inside { levels[y] } else { BACKGROUND };
                let eps: f64 = rng.sample(StandardNormal);
                data.push((base + config.noise_sigma * eps).clamp(0.0, 1.0));
            }
        }
        out.images.push(ImageBuffer::new(h, w, 1, data)?);
        out.labels.push(y);
        out.blobs.push((top, left, b));
    }
    Ok(out)
}

/// Reads the blob brightness of a mean-subtracted crop. A pixel counts as
/// blob when the 2x2 block it starts is above threshold, which ignores
/// isolated noise. Crops without blob pixels score uniform; the more blob
/// pixels, the more confident the class estimate.
#[derive(Debug, Clone)]
pub struct BlobScorer {
    levels: Vec<f64>,
    threshold: f64,
    width: f64,
}

impl BlobScorer {
    pub fn new(n_classes: usize, mean_pixel: f64) -> Self {
        let levels: Vec<f64> = class_levels(n_classes).iter().map(|l| l - mean_pixel).collect();
        let background = BACKGROUND - mean_pixel;
        let spacing = if n_classes > 1 { levels[1] - levels[0] } else { 0.4 };
        Self {
            threshold: background + 0.5 * (levels[0] - background),
            width: spacing / 3.0,
            levels,
        }
    }
}

impl RegionScorer for BlobScorer {
    fn n_classes(&self) -> usize {
        self.levels.len()
    }

    fn score(&self, crop: &ImageBuffer) -> Result<Vec<f64>> {
        let m = self.levels.len();
        let lit = |r: usize, c: usize| crop.get(r, c, 0) > self.threshold;
        let mut bright = Vec::new();
        for r in 0..crop.height().saturating_sub(1) {
            for c in 0..crop.width().saturating_sub(1) {
                if lit(r, c) && lit(r + 1, c) && lit(r, c + 1) && lit(r + 1, c + 1) {
                    bright.push(crop.get(r, c, 0));
                }
            }
        }
        if bright.is_empty() {
            return Ok(vec![1.0 / m as f64; m]);
        }
        bright.sort_by(f64::total_cmp);
        let estimate = bright[(bright.len() - 1) * 3 / 4];
        let logits: Vec<f64> = self
            .levels
            .iter()
            .map(|l| -((estimate - l) / self.width).powi(2) / 2.0)
            .collect();
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exp: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
        let total: f64 = exp.iter().sum();
        let confidence = 1.0 - (-(bright.len() as f64) / 4.0).exp();
        let out: Vec<f64> = exp
            .iter()
            .map(|e| confidence * e / total + (1.0 - confidence) / m as f64)
            .collect();
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("blob scores"));
        }
        Ok(out)
    }
}
