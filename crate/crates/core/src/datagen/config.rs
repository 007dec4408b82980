use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Responses,
    Vectors,
    Images,
}

impl std::str::FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "responses" => Ok(Preset::Responses),
            "vectors" => Ok(Preset::Vectors),
            "images" => Ok(Preset::Images),
            other => Err(Error::InvalidConfig(format!("unknown preset {other:?}"))),
        }
    }
}

/// Parameters of the planted-concept generators. Not every field is read
/// by every generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorConfig {
    pub n_events: usize,
    pub n_objects: usize,
    pub n_scenes: usize,
    /// Signature concepts per event, per stream.
    pub sparsity: usize,
    /// Weight of the signature peak relative to the background. Infinite
    /// means response rows are exactly uniform over the signature. Vector
    /// samples use it as the signal amplitude.
    pub concentration: f64,
    pub noise_sigma: f64,
    /// Chance that a sample carries concepts of a different event.
    pub confusion: f64,
    pub feature_dim: usize,
    /// Chance that each signature concept shows up in a vector sample.
    pub signature_rate: f64,
    pub n_train: usize,
    pub n_test: usize,
    /// Single-concept samples in the auxiliary dataset.
    pub n_aux: usize,
    /// Gain of the teacher that produces soft codes.
    pub teacher_scale: f64,
    pub image_min_side: usize,
    pub image_max_side: usize,
    pub blob_side: usize,
    pub seed: u64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self::responses()
    }
}

impl GeneratorConfig {
    pub fn preset(p: Preset) -> Self {
        match p {
            Preset::Responses => Self::responses(),
            Preset::Vectors => Self::vectors(),
            Preset::Images => Self::images(),
        }
    }

    /// Strongly peaked concept responses.
    pub fn responses() -> Self {
        Self {
            n_events: 4,
            n_objects: 20,
            n_scenes: 12,
            sparsity: 2,
            concentration: 20.0,
            noise_sigma: 0.5,
            confusion: 0.0,
            feature_dim: 32,
            signature_rate: 0.8,
            n_train: 200,
            n_test: 200,
            n_aux: 2000,
            teacher_scale: 4.0,
            image_min_side: 20,
            image_max_side: 32,
            blob_side: 5,
            seed: 0,
        }
    }

    /// Small, noisy vector benchmark that a wide trunk overfits.
    pub fn vectors() -> Self {
        Self {
            n_objects: 8,
            concentration: 2.0,
            noise_sigma: 1.0,
            n_train: 64,
            n_test: 400,
            ..Self::responses()
        }
    }

    pub fn images() -> Self {
        Self {
            noise_sigma: 0.03,
            n_train: 0,
            n_test: 200,
            ..Self::responses()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        if self.n_events == 0 || self.n_objects == 0 || self.n_scenes == 0 || self.sparsity == 0 {
            return bad("event, concept and signature counts must be >= 1");
        }
        if self.sparsity > self.n_objects.min(self.n_scenes) {
            return bad("sparsity exceeds the number of concepts");
        }
        if self.n_events * self.sparsity > self.n_objects.min(self.n_scenes) {
            return bad("signatures do not fit disjointly: need events * sparsity <= concepts");
        }
        if !(self.concentration > 0.0) {
            return bad("concentration must be > 0");
        }
        if !(self.noise_sigma >= 0.0) || !self.noise_sigma.is_finite() {
            return bad("noise_sigma must be finite and >= 0");
        }
        if !(0.0..=1.0).contains(&self.confusion) || !(0.0..=1.0).contains(&self.signature_rate) {
            return bad("confusion and signature_rate must be in [0, 1]");
        }
        if self.feature_dim == 0 {
            return bad("feature_dim must be >= 1");
        }
        if self.image_min_side == 0
            || self.image_min_side > self.image_max_side
            || self.blob_side == 0
            || self.blob_side > self.image_min_side
        {
            return bad("need 1 <= blob_side <= image_min_side <= image_max_side");
        }
        Ok(())
    }
}
