//! Coefficient regression network with hand-written gradients, Adam and the
//! training loop.

mod checkpoint;
mod config;
mod layers;
mod model;
mod optim;
mod train;

pub use checkpoint::{load_checkpoint, parse_checkpoint, save_checkpoint, write_checkpoint};
pub use config::{NetworkConfig, TrainConfig};
pub use layers::{
    avg_pool_temporal, avg_pool_temporal_backward, trajectory_transform,
    trajectory_transform_backward, BatchNorm, DenseBlock, DenseLayer, Linear,
};
pub use model::{
    init_network, l1_loss, l1_loss_grad, ForwardCache, ForwardOutput, GradientSet, Mode,
    NetworkParams,
};
pub use optim::{adam_step, lr_at_epoch, AdamState};
pub use train::{evaluate_loss, train, train_with, EpochRecord, Sample};
