//! The learned unmask filter: an MLP from a block's confidence vector to
//! per-position keep logits, trained with binary cross-entropy and AdamW.

mod adamw;
mod model;
mod online;
mod train;

pub use adamw::{adamw_step, AdamWConfig, AdamWState};
pub use model::{
    bce_backward, bce_loss, layer_widths, param_count, sigmoid, Activation, Dense, FilterModel, Gradients,
};
pub use online::online_train;
pub use train::{label_accuracy, train_filter, train_filter_with, EpochLoss, LossHistory, TrainConfig, TrainingSample};
