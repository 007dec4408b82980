use rand::Rng;
use serde::{Deserialize, Serialize};

use super::image::{resize_bilinear, ImageBuffer};
use super::regions::{crop_rect, CropConfig};
use crate::error::{Error, Result};

/// Random crops for training: width and height are drawn independently
/// from `sizes`, the crop is resized to the network input and mirrored
/// with probability `flip_prob`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentConfig {
    pub sizes: Vec<usize>,
    pub flip_prob: f64,
}

impl AugmentConfig {
    /// The {256, 224, 192, 160, 128} set scaled to `crop.base_side`.
    pub fn for_crop(crop: &CropConfig) -> Self {
        let sizes = [256usize, 224, 192, 160, 128]
            .iter()
            .map(|&s| ((s * crop.base_side) as f64 / 256.0).round().max(1.0) as usize)
            .collect();
        Self {
            sizes,
            flip_prob: 0.5,
        }
    }
}

pub fn training_crop_sample<R: Rng + ?Sized>(
    image: &ImageBuffer,
    crop: &CropConfig,
    augment: &AugmentConfig,
    rng: &mut R,
) -> Result<ImageBuffer> {
    let base = crop.base_side;
    if augment.sizes.is_empty() || augment.sizes.iter().any(|&s| s == 0 || s > base) {
        return Err(Error::InvalidConfig(format!(
            "crop sizes must be in 1..={base}"
        )));
    }
    let square = resize_bilinear(image, base, base)?;
    let h = augment.sizes[rng.random_range(0..augment.sizes.len())];
    let w = augment.sizes[rng.random_range(0..augment.sizes.len())];
    let top = rng.random_range(0..=base - h);
    let left = rng.random_range(0..=base - w);
    let region = crop_rect(&square, top, left, h, w)?;
    let out = resize_bilinear(&region, crop.crop_side, crop.crop_side)?;
    if rng.random::<f64>() < augment.flip_prob {
        Ok(out.flip_horizontal())
    } else {
        Ok(out)
    }
}
