//! Multi-region inference: resize, crop on a grid, score each crop with
//! two streams and average.

mod augment;
mod image;
mod regions;
mod scoring;

pub use augment::{training_crop_sample, AugmentConfig};
pub use image::{resize_bilinear, ImageBuffer};
pub use regions::{
    crop_extract, extract_all, generate_regions, grid_offsets, CropConfig, RatioMode, RegionSpec,
};
pub use scoring::{
    fuse_regions, fuse_streams, infer_center_crop, infer_image, score_regions, NetworkScorer, PipelineConfig,
    RegionScore, RegionScorer,
};
