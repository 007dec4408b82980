use std::ops::Range;

use ndarray::ArrayView2;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::config::NetworkConfig;
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayoutEntry {
    pub name: String,
    pub offset: usize,
    pub rows: usize,
    pub cols: usize,
}

impl LayoutEntry {
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn range(&self) -> Range<usize> {
        self.offset..self.offset + self.len()
    }
}

/// Stored standardization statistics for the trunk output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
}

impl NormStats {
    pub fn identity(dim: usize) -> Self {
        Self {
            mean: vec![0.0; dim],
            var: vec![1.0; dim],
        }
    }
}

/// Every learnable parameter in one flat vector. The layout is
/// `trunk.{l}.weight`, `trunk.{l}.bias` for each hidden layer followed by
/// `head.{h}.weight`, `head.{h}.bias`; weights are `out x in`, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamStore {
    pub layout: Vec<LayoutEntry>,
    pub values: Vec<f64>,
    pub seed: u64,
    pub norm_stats: Option<NormStats>,
}

impl ParamStore {
    /// Weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)), biases zero. Each layer
    /// and each head draws from its own stream, so adding a head leaves the
    /// others untouched.
    pub fn init(config: &NetworkConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let layout = build_layout(config);
        let total = layout.last().map_or(0, |e| e.offset + e.len());
        let mut values = vec![0.0; total];
        let n_trunk = config.hidden.len();
        for (i, entry) in layout.iter().enumerate() {
            if !entry.name.ends_with("weight") {
                continue;
            }
            let layer = i / 2;
            let mut rng = if layer < n_trunk {
                rng::stream(seed, "trunk", layer as u64)
            } else {
                rng::stream(seed, "head", (layer - n_trunk) as u64)
            };
            let bound = 1.0 / (entry.cols as f64).sqrt();
            for v in &mut values[entry.range()] {
                *v = rng.random_range(-bound..bound);
            }
        }
        let norm_stats = config
            .norm
            .map(|_| NormStats::identity(config.feature_dim()));
        Ok(Self {
            layout,
            values,
            seed,
            norm_stats,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn view(&self, index: usize) -> ArrayView2<'_, f64> {
        let e = &self.layout[index];
        ArrayView2::from_shape((e.rows, e.cols), &self.values[e.range()])
            .expect("layout entry matches its slice")
    }

    pub fn trunk_weight(&self, layer: usize) -> ArrayView2<'_, f64> {
        self.view(2 * layer)
    }

    pub fn trunk_bias(&self, layer: usize) -> &[f64] {
        &self.values[self.layout[2 * layer + 1].range()]
    }

    fn head_index(&self, head: usize) -> usize {
        self.layout.len() - 2 * self.n_heads() + 2 * head
    }

    pub fn n_heads(&self) -> usize {
        self.layout
            .iter()
            .filter(|e| e.name.starts_with("head.") && e.name.ends_with("weight"))
            .count()
    }

    pub fn head_weight(&self, head: usize) -> ArrayView2<'_, f64> {
        self.view(self.head_index(head))
    }

    pub fn head_bias(&self, head: usize) -> &[f64] {
        &self.values[self.layout[self.head_index(head) + 1].range()]
    }

    /// Trunk parameters are laid out first and contiguously.
    pub fn trunk_range(&self) -> Range<usize> {
        let end = self
            .layout
            .iter()
            .filter(|e| e.name.starts_with("trunk."))
            .map(|e| e.offset + e.len())
            .max()
            .unwrap_or(0);
        0..end
    }

    pub fn head_range(&self, head: usize) -> Range<usize> {
        let w = &self.layout[self.head_index(head)];
        let b = &self.layout[self.head_index(head) + 1];
        w.offset..b.offset + b.len()
    }

    /// FNV-1a over the bits of the trunk parameters and stored statistics;
    /// equal digests mean the same trunk.
    pub fn trunk_digest(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |x: f64| {
            for b in x.to_bits().to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        };
        for &v in &self.values[self.trunk_range()] {
            eat(v);
        }
        if let Some(stats) = &self.norm_stats {
            stats.mean.iter().chain(&stats.var).for_each(|&v| eat(v));
        }
        h
    }
}

fn build_layout(config: &NetworkConfig) -> Vec<LayoutEntry> {
    let mut layout = Vec::new();
    let mut offset = 0;
    let mut push = |name: String, rows: usize, cols: usize| {
        layout.push(LayoutEntry {
            name,
            offset,
            rows,
            cols,
        });
        offset += rows * cols;
    };
    let mut fan_in = config.input_dim;
    for (l, &width) in config.hidden.iter().enumerate() {
        push(format!("trunk.{l}.weight"), width, fan_in);
        push(format!("trunk.{l}.bias"), 1, width);
        fan_in = width;
    }
    for (h, &width) in config.heads.iter().enumerate() {
        push(format!("head.{h}.weight"), width, fan_in);
        push(format!("head.{h}.bias"), 1, width);
    }
    layout
}

/// A network configuration together with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub config: NetworkConfig,
    pub params: ParamStore,
}

impl Checkpoint {
    pub fn init(config: NetworkConfig, seed: u64) -> Result<Self> {
        let params = ParamStore::init(&config, seed)?;
        Ok(Self { config, params })
    }

    /// Copies this checkpoint's trunk (weights and stored statistics) into a
    /// network with fresh heads of the given widths.
    pub fn transplant(&self, heads: Vec<usize>, dropout_rate: f64, seed: u64) -> Result<Checkpoint> {
        let config = NetworkConfig {
            heads,
            dropout_rate,
            ..self.config.clone()
        };
        let mut params = ParamStore::init(&config, seed)?;
        let trunk = self.params.trunk_range();
        if trunk != params.trunk_range() {
            return Err(Error::DimensionMismatch {
                what: "source trunk parameters",
                expected: params.trunk_range().len(),
                got: trunk.len(),
            });
        }
        params.values[trunk.clone()].copy_from_slice(&self.params.values[trunk]);
        if config.norm.is_some() {
            params.norm_stats = self.params.norm_stats.clone();
        }
        Ok(Checkpoint { config, params })
    }

    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        let expected = build_layout(&self.config);
        if expected != self.params.layout {
            return Err(Error::InvalidConfig(
                "parameter layout does not match network config".into(),
            ));
        }
        let total = expected.last().map_or(0, |e| e.offset + e.len());
        if self.params.values.len() != total {
            return Err(Error::DimensionMismatch {
                what: "parameter vector",
                expected: total,
                got: self.params.values.len(),
            });
        }
        if let (Some(_), Some(stats)) = (&self.config.norm, &self.params.norm_stats) {
            let d = self.config.feature_dim();
            if stats.mean.len() != d || stats.var.len() != d {
                return Err(Error::DimensionMismatch {
                    what: "norm statistics",
                    expected: d,
                    got: stats.mean.len(),
                });
            }
        }
        Ok(())
    }
}
