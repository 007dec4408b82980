//! A small differentiable network: affine+ReLU trunk, optional freezable
//! standardization, dropout, and one or two softmax heads, with exact
//! analytic gradients for the transfer objectives.

mod backward;
mod config;
pub(crate) mod forward;
mod gradcheck;
mod loss;
mod optim;
mod params;

pub use backward::{backward, data_loss_gradient};
pub use config::{NetworkConfig, NormConfig, DEFAULT_DROPOUT};
pub use forward::{
    forward, forward_with_mask, predict, sample_dropout_mask, softmax_rows, trunk_output, ForwardCache, Mode,
};
pub use gradcheck::{grad_check, LossSpec};
pub use loss::{
    cross_entropy_loss, data_loss, knowledge_loss, soft_target_loss, DataLossOutput, LossOutput,
    SoftDirection, SoftTargets, AUX_HEAD, DEFAULT_ALPHA_OBJECT, DEFAULT_ALPHA_SCENE, DEFAULT_BETA,
    EVENT_HEAD,
};
pub use optim::{sgd_momentum_step, StepSchedule, DEFAULT_LR, DEFAULT_LR_DECAY, DEFAULT_MOMENTUM};
pub use params::{Checkpoint, LayoutEntry, NormStats, ParamStore};
