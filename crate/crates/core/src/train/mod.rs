//! Transfer training, the linear probe and the evaluation protocol.

mod config;
mod dataset;
mod metrics;
mod trainer;

pub use config::{TransferConfig, TransferMode};
pub use dataset::{Dataset, Split};
pub use metrics::{argmax, average_precision, evaluate, Evaluation};
pub use trainer::{
    data_transfer_train, event_scores, init_transfer_train, knowledge_transfer_train,
    linear_probe_train, pretrain_source, train_with_observer, AuxTask, EvalPoint, TrainOutcome,
    TrainReport,
};
