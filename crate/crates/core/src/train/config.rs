use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{
    SoftDirection, StepSchedule, DEFAULT_ALPHA_OBJECT, DEFAULT_BETA, DEFAULT_DROPOUT,
    DEFAULT_MOMENTUM,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum TransferMode {
    /// Fine-tune from the source trunk on the event labels only.
    #[default]
    Init,
    /// Additionally imitate teacher soft codes on a second head.
    Knowledge,
    /// Additionally classify an auxiliary dataset through the shared trunk.
    Data,
}

impl std::fmt::Display for TransferMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TransferMode::Init => "init",
            TransferMode::Knowledge => "knowledge",
            TransferMode::Data => "data",
        })
    }
}

impl std::str::FromStr for TransferMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "init" => Ok(TransferMode::Init),
            "knowledge" => Ok(TransferMode::Knowledge),
            "data" => Ok(TransferMode::Data),
            other => Err(Error::InvalidConfig(format!("unknown transfer mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TransferConfig {
    pub mode: TransferMode,
    pub alpha: f64,
    pub beta: f64,
    pub schedule: StepSchedule,
    pub momentum: f64,
    pub batch_size: usize,
    pub dropout_rate: f64,
    pub seed: u64,
    pub soft_direction: SoftDirection,
    /// Evaluate every this many iterations (and always at the start and end).
    pub eval_every: usize,
    /// Running-average rate for stored statistics of an unfrozen norm layer.
    pub norm_momentum: f64,
}

impl Default for TransferConfig {
    fn default() -> Self {
        Self {
            mode: TransferMode::Init,
            alpha: DEFAULT_ALPHA_OBJECT,
            beta: DEFAULT_BETA,
            schedule: StepSchedule::default(),
            momentum: DEFAULT_MOMENTUM,
            batch_size: 32,
            dropout_rate: DEFAULT_DROPOUT,
            seed: 0,
            soft_direction: SoftDirection::TargetWeighted,
            eval_every: 50,
            norm_momentum: 0.1,
        }
    }
}

impl TransferConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch size must be >= 1".into()));
        }
        if self.eval_every == 0 {
            return Err(Error::InvalidConfig("eval_every must be >= 1".into()));
        }
        if !(self.alpha >= 0.0) || !(self.beta >= 0.0) {
            return Err(Error::InvalidConfig("alpha and beta must be >= 0".into()));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::InvalidConfig("dropout rate outside [0, 1)".into()));
        }
        if !(self.schedule.initial_lr > 0.0) {
            return Err(Error::InvalidConfig("learning rate must be > 0".into()));
        }
        Ok(())
    }
}
