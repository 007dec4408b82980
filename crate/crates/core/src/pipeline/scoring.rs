use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::image::{resize_bilinear, ImageBuffer};
use super::regions::{crop_extract, extract_all, grid_offsets, CropConfig, RatioMode, RegionSpec};
use crate::error::{Error, Result};
use crate::nn::{predict, Checkpoint, EVENT_HEAD};
use crate::stats::{check_simplex, INGEST_SIMPLEX_TOL};

/// Maps a mean-subtracted crop to a probability vector over events.
pub trait RegionScorer: Sync {
    fn n_classes(&self) -> usize;
    fn score(&self, crop: &ImageBuffer) -> Result<Vec<f64>>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub crop: CropConfig,
    /// One value per channel, or a single value for all channels.
    pub mean_pixel: Vec<f64>,
    pub alpha_o: f64,
    pub alpha_s: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            crop: CropConfig::default(),
            mean_pixel: vec![0.5],
            alpha_o: 0.5,
            alpha_s: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionScore {
    pub spec: RegionSpec,
    pub object: Vec<f64>,
    pub scene: Vec<f64>,
    pub fused: Vec<f64>,
}

/// `alpha_o * object + alpha_s * scene`.
pub fn fuse_streams(object: &[f64], scene: &[f64], alpha_o: f64, alpha_s: f64) -> Result<Vec<f64>> {
    if object.len() != scene.len() {
        return Err(Error::DimensionMismatch {
            what: "stream scores",
            expected: object.len(),
            got: scene.len(),
        });
    }
    if !(alpha_o >= 0.0 && alpha_s >= 0.0) {
        return Err(Error::InvalidConfig("fusion weights must be >= 0".into()));
    }
    Ok(object
        .iter()
        .zip(scene)
        .map(|(o, s)| alpha_o * o + alpha_s * s)
        .collect())
}

/// Mean of the fused region scores. Argmax-equivalent to their sum, and
/// stays on the simplex.
pub fn fuse_regions(regions: &[RegionScore]) -> Result<Vec<f64>> {
    let rows: Vec<&[f64]> = regions.iter().map(|r| r.fused.as_slice()).collect();
    mean_rows(&rows)
}

pub(crate) fn mean_rows(rows: &[&[f64]]) -> Result<Vec<f64>> {
    let first = rows
        .first()
        .ok_or_else(|| Error::EmptyDataset("no regions to fuse".into()))?;
    let mut acc = vec![0.0; first.len()];
    for row in rows {
        if row.len() != acc.len() {
            return Err(Error::DimensionMismatch {
                what: "region scores",
                expected: acc.len(),
                got: row.len(),
            });
        }
        for (a, v) in acc.iter_mut().zip(*row) {
            *a += v;
        }
    }
    let n = rows.len() as f64;
    Ok(acc.into_iter().map(|a| a / n).collect())
}

fn checked_score(scorer: &dyn RegionScorer, crop: &ImageBuffer, index: usize) -> Result<Vec<f64>> {
    let v = scorer.score(crop)?;
    if v.len() != scorer.n_classes() {
        return Err(Error::DimensionMismatch {
            what: "scorer output",
            expected: scorer.n_classes(),
            got: v.len(),
        });
    }
    check_simplex(&v, INGEST_SIMPLEX_TOL).map_err(|_| Error::Unnormalized {
        row: index,
        sum: v.iter().sum(),
    })?;
    Ok(v)
}

/// Scores every region with both streams, in parallel, returned in region
/// order.
pub fn score_regions(
    image: &ImageBuffer,
    config: &PipelineConfig,
    object: &dyn RegionScorer,
    scene: &dyn RegionScorer,
) -> Result<Vec<RegionScore>> {
    if object.n_classes() != scene.n_classes() {
        return Err(Error::DimensionMismatch {
            what: "scorer event counts",
            expected: object.n_classes(),
            got: scene.n_classes(),
        });
    }
    let crops = extract_all(image, &config.crop)?;
    crops
        .into_par_iter()
        .enumerate()
        .map(|(i, (spec, crop))| {
            let centred = crop.subtract_mean(&config.mean_pixel)?;
            let o = checked_score(object, &centred, i)?;
            let s = checked_score(scene, &centred, i)?;
            let fused = fuse_streams(&o, &s, config.alpha_o, config.alpha_s)?;
            Ok(RegionScore {
                spec,
                object: o,
                scene: s,
                fused,
            })
        })
        .collect()
}

/// Image-level event scores.
pub fn infer_image(
    image: &ImageBuffer,
    config: &PipelineConfig,
    object: &dyn RegionScorer,
    scene: &dyn RegionScorer,
) -> Result<Vec<f64>> {
    fuse_regions(&score_regions(image, config, object, scene)?)
}

/// Scores of the single centre crop: square resize at scale 1, middle
/// grid cell.
pub fn infer_center_crop(
    image: &ImageBuffer,
    config: &PipelineConfig,
    object: &dyn RegionScorer,
    scene: &dyn RegionScorer,
) -> Result<Vec<f64>> {
    let crop = &config.crop;
    let (side, _) = crop.resized_dims(image.height(), image.width(), RatioMode::Square, 1.0)?;
    let offset = grid_offsets(side, crop.crop_side, crop.grid)[crop.grid / 2];
    let square = resize_bilinear(image, side, side)?;
    let spec = RegionSpec {
        ratio_mode: RatioMode::Square,
        scale_factor: 1.0,
        cell_row: crop.grid / 2,
        cell_col: crop.grid / 2,
        top: offset,
        left: offset,
        size: crop.crop_side,
        resized_height: side,
        resized_width: side,
    };
    let centred = crop_extract(&square, &spec)?.subtract_mean(&config.mean_pixel)?;
    let o = checked_score(object, &centred, 0)?;
    let s = checked_score(scene, &centred, 0)?;
    fuse_streams(&o, &s, config.alpha_o, config.alpha_s)
}

/// A trained network reading flattened crops.
#[derive(Debug, Clone)]
pub struct NetworkScorer {
    checkpoint: Checkpoint,
}

impl NetworkScorer {
    pub fn new(checkpoint: Checkpoint) -> Result<Self> {
        checkpoint.validate()?;
        Ok(Self { checkpoint })
    }

    pub fn checkpoint(&self) -> &Checkpoint {
        &self.checkpoint
    }
}

impl RegionScorer for NetworkScorer {
    fn n_classes(&self) -> usize {
        self.checkpoint.config.heads[EVENT_HEAD]
    }

    fn score(&self, crop: &ImageBuffer) -> Result<Vec<f64>> {
        let x = Array2::from_shape_vec((1, crop.data().len()), crop.data().to_vec())
            .expect("one row");
        let probs = predict(
            &self.checkpoint.config,
            &self.checkpoint.params,
            x.view(),
            EVENT_HEAD,
        )?;
        Ok(probs.row(0).to_vec())
    }
}
