//! L1 objective, step learning-rate schedule, Adam, the training loop and
//! checkpoint persistence.

mod checkpoint;
mod config;
mod loss;
mod optim;
mod trainer;

pub use checkpoint::{
    load_checkpoint, save_checkpoint, Checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION,
};
pub use config::{lr_at_epoch, TrainConfig};
pub use loss::{l1_loss, mae_with_grad};
pub use optim::Adam;
pub use trainer::{
    batch_gradients, format_train_log, train, EpochLog, TrainState, TRAIN_LOG_HEADER,
};
