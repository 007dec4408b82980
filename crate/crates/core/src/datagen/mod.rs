//! Planted-concept synthetic data for tests and benchmarks.

mod config;
mod images;
mod planted;
mod responses;
mod vectors;

pub use config::{GeneratorConfig, Preset};
pub use images::{class_levels, gen_image_dataset, BlobScorer, ImageSet};
pub use planted::{recovery_rate, PlantedTruth};
pub use responses::{gen_response_data, ResponseData};
pub use vectors::{gen_concept_dataset, gen_vector_dataset, teacher_codes, VectorData};
