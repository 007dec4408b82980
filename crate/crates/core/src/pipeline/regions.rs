use serde::{Deserialize, Serialize};

use super::image::{resize_bilinear, ImageBuffer};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RatioMode {
    /// Smaller side to the target length, the other side proportional.
    AspectPreserving,
    /// Both sides to the target length.
    Square,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CropConfig {
    pub base_side: usize,
    pub crop_side: usize,
    pub scale_factors: Vec<f64>,
    pub ratio_modes: Vec<RatioMode>,
    /// Crops per axis; `grid * grid` crops per resized image.
    pub grid: usize,
}

impl Default for CropConfig {
    fn default() -> Self {
        Self {
            base_side: 256,
            crop_side: 224,
            scale_factors: vec![1.0, 1.5, 2.0],
            ratio_modes: vec![RatioMode::AspectPreserving, RatioMode::Square],
            grid: 3,
        }
    }
}

impl CropConfig {
    /// Same layout at a smaller resolution.
    pub fn desk(base_side: usize, crop_side: usize) -> Self {
        Self {
            base_side,
            crop_side,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.crop_side == 0 || self.crop_side > self.base_side {
            return Err(Error::InvalidConfig(format!(
                "crop side {} must be in 1..={}",
                self.crop_side, self.base_side
            )));
        }
        if self.grid == 0 {
            return Err(Error::InvalidConfig("grid must be >= 1".into()));
        }
        if self.scale_factors.is_empty() || self.ratio_modes.is_empty() {
            return Err(Error::InvalidConfig(
                "need at least one scale and one ratio mode".into(),
            ));
        }
        if self.scale_factors.iter().any(|&s| !(s >= 1.0) || !s.is_finite()) {
            return Err(Error::InvalidConfig("scale factors must be >= 1".into()));
        }
        Ok(())
    }

    pub fn region_count(&self) -> usize {
        self.ratio_modes.len() * self.scale_factors.len() * self.grid * self.grid
    }

    /// Resized (height, width) of an image under one ratio mode and scale.
    pub fn resized_dims(
        &self,
        height: usize,
        width: usize,
        mode: RatioMode,
        scale: f64,
    ) -> Result<(usize, usize)> {
        if height == 0 || width == 0 {
            return Err(Error::InvalidConfig("image dimensions must be >= 1".into()));
        }
        let target = (self.base_side as f64 * scale).round() as usize;
        let dims = match mode {
            RatioMode::Square => (target, target),
            RatioMode::AspectPreserving if height <= width => {
                (target, width * target / height)
            }
            RatioMode::AspectPreserving => (height * target / width, target),
        };
        let short = dims.0.min(dims.1);
        if short < self.crop_side {
            return Err(Error::ImageTooSmall {
                side: short,
                crop: self.crop_side,
            });
        }
        Ok(dims)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionSpec {
    pub ratio_mode: RatioMode,
    pub scale_factor: f64,
    pub cell_row: usize,
    pub cell_col: usize,
    pub top: usize,
    pub left: usize,
    pub size: usize,
    /// Dimensions of the resized image the rectangle lives in.
    pub resized_height: usize,
    pub resized_width: usize,
}

/// `floor(i * (len - crop) / (grid - 1))` for each grid index.
pub fn grid_offsets(len: usize, crop: usize, grid: usize) -> Vec<usize> {
    if grid == 1 {
        return vec![0];
    }
    let span = len - crop;
    (0..grid).map(|i| i * span / (grid - 1)).collect()
}

/// Every crop rectangle, ordered by ratio mode, scale, grid row, grid column.
pub fn generate_regions(height: usize, width: usize, config: &CropConfig) -> Result<Vec<RegionSpec>> {
    config.validate()?;
    let mut out = Vec::with_capacity(config.region_count());
    for &mode in &config.ratio_modes {
        for &scale in &config.scale_factors {
            let (h, w) = config.resized_dims(height, width, mode, scale)?;
            let rows = grid_offsets(h, config.crop_side, config.grid);
            let cols = grid_offsets(w, config.crop_side, config.grid);
            for (i, &top) in rows.iter().enumerate() {
                for (j, &left) in cols.iter().enumerate() {
                    out.push(RegionSpec {
                        ratio_mode: mode,
                        scale_factor: scale,
                        cell_row: i,
                        cell_col: j,
                        top,
                        left,
                        size: config.crop_side,
                        resized_height: h,
                        resized_width: w,
                    });
                }
            }
        }
    }
    Ok(out)
}

/// Copies the spec's square out of `image` (which should be the resized image).
pub fn crop_extract(image: &ImageBuffer, spec: &RegionSpec) -> Result<ImageBuffer> {
    crop_rect(image, spec.top, spec.left, spec.size, spec.size)
}

pub(crate) fn crop_rect(
    image: &ImageBuffer,
    top: usize,
    left: usize,
    height: usize,
    width: usize,
) -> Result<ImageBuffer> {
    if height == 0 || width == 0 || top + height > image.height() || left + width > image.width() {
        return Err(Error::OutOfBounds(format!(
            "rect {height}x{width} at ({top}, {left}) outside {}x{} image",
            image.height(),
            image.width()
        )));
    }
    let ch = image.channels();
    let mut data = Vec::with_capacity(height * width * ch);
    for r in top..top + height {
        let start = (r * image.width() + left) * ch;
        data.extend_from_slice(&image.data()[start..start + width * ch]);
    }
    ImageBuffer::new(height, width, ch, data)
}

/// Resizes once per (ratio mode, scale) and cuts out every region, in
/// [`generate_regions`] order.
pub fn extract_all(image: &ImageBuffer, config: &CropConfig) -> Result<Vec<(RegionSpec, ImageBuffer)>> {
    let specs = generate_regions(image.height(), image.width(), config)?;
    let mut out = Vec::with_capacity(specs.len());
    let mut resized: Option<((usize, usize), ImageBuffer)> = None;
    for spec in specs {
        let dims = (spec.resized_height, spec.resized_width);
        let cached = match &resized {
            Some((d, _)) => *d == dims,
            None => false,
        };
        if !cached {
            resized = Some((dims, resize_bilinear(image, dims.0, dims.1)?));
        }
        let crop = crop_extract(&resized.as_ref().expect("set above").1, &spec)?;
        out.push((spec, crop));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_give_54_regions() {
        let c = CropConfig::default();
        assert_eq!(generate_regions(300, 400, &c).unwrap().len(), 54);
        assert_eq!(generate_regions(10, 10, &c).unwrap().len(), 54);
        assert_eq!(c.region_count(), 54);
    }

    #[test]
    fn offsets_hand_examples() {
        assert_eq!(grid_offsets(256, 224, 3), vec![0, 16, 32]);
        assert_eq!(grid_offsets(320, 224, 3), vec![0, 48, 96]);
        assert_eq!(grid_offsets(300, 224, 1), vec![0]);
    }

    #[test]
    fn aspect_mode_floors_the_long_side() {
        let c = CropConfig::default();
        assert_eq!(
            c.resized_dims(300, 400, RatioMode::AspectPreserving, 1.0).unwrap(),
            (256, 341)
        );
        assert_eq!(
            c.resized_dims(400, 300, RatioMode::AspectPreserving, 1.5).unwrap(),
            (512, 384)
        );
        assert_eq!(c.resized_dims(400, 300, RatioMode::Square, 2.0).unwrap(), (512, 512));
    }

    #[test]
    fn too_small_after_resize() {
        let c = CropConfig::desk(8, 8);
        let err = c.resized_dims(5, 5, RatioMode::Square, 0.5).unwrap_err();
        assert!(err.to_string().contains("too small after resize"));
        assert!(generate_regions(1, 100, &c).is_ok());
    }

    #[test]
    fn crop_indexing() {
        let img = ImageBuffer::new(3, 3, 1, (1..=9).map(f64::from).collect()).unwrap();
        let c = crop_rect(&img, 0, 0, 2, 2).unwrap();
        assert_eq!(c.data(), &[1.0, 2.0, 4.0, 5.0]);
        assert_eq!(crop_rect(&img, 0, 0, 3, 3).unwrap(), img);
        assert!(crop_rect(&img, 2, 2, 2, 2).is_err());
    }

    #[test]
    fn checkerboard_crops() {
        let data = (0..16).map(|i| ((i / 4 + i % 4) % 2) as f64).collect();
        let img = ImageBuffer::new(4, 4, 1, data).unwrap();
        assert_eq!(crop_rect(&img, 0, 0, 2, 2).unwrap().data(), &[0.0, 1.0, 1.0, 0.0]);
        assert_eq!(crop_rect(&img, 2, 1, 2, 2).unwrap().data(), &[1.0, 0.0, 0.0, 1.0]);
    }
}
