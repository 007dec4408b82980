use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dropout applied to the shared features before the heads.
pub const DEFAULT_DROPOUT: f64 = 0.7;

/// Per-feature standardization on the trunk output. When frozen, the
/// stored statistics are used in every mode; otherwise training batches
/// are standardized with their own statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormConfig {
    pub frozen: bool,
    pub eps: f64,
}

impl Default for NormConfig {
    fn default() -> Self {
        Self {
            frozen: true,
            eps: 1e-5,
        }
    }
}

/// Affine+ReLU trunk, optional standardization, dropout, then one or two
/// softmax heads reading the same features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub input_dim: usize,
    pub hidden: Vec<usize>,
    pub norm: Option<NormConfig>,
    pub dropout_rate: f64,
    pub heads: Vec<usize>,
}

impl NetworkConfig {
    pub fn new(input_dim: usize, hidden: Vec<usize>, heads: Vec<usize>) -> Self {
        Self {
            input_dim,
            hidden,
            norm: None,
            dropout_rate: 0.0,
            heads,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.hidden.contains(&0) {
            return Err(Error::InvalidConfig("layer widths must be >= 1".into()));
        }
        if self.heads.is_empty() || self.heads.len() > 2 || self.heads.contains(&0) {
            return Err(Error::InvalidConfig(
                "network needs one or two heads of width >= 1".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::InvalidConfig(format!(
                "dropout rate {} outside [0, 1)",
                self.dropout_rate
            )));
        }
        if let Some(norm) = &self.norm {
            if !(norm.eps > 0.0) {
                return Err(Error::InvalidConfig("norm eps must be > 0".into()));
            }
        }
        Ok(())
    }

    /// Width of the representation the heads read.
    pub fn feature_dim(&self) -> usize {
        self.hidden.last().copied().unwrap_or(self.input_dim)
    }

    pub fn n_heads(&self) -> usize {
        self.heads.len()
    }

    /// Same trunk (input, hidden widths, normalization) as `other`.
    pub fn same_trunk(&self, other: &NetworkConfig) -> bool {
        self.input_dim == other.input_dim && self.hidden == other.hidden && self.norm == other.norm
    }
}
