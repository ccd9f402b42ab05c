//! The multi-task forecaster: shared per-node encoder, recurrent state
//! fusion, graph propagation, fluctuation-gated fusion, dynamic adjustment
//! and a shared trunk with one head per task.

mod backward;
mod config;
pub mod forward;
mod loss;
mod params;
mod persist;
mod predict;
mod train;

pub use backward::{mean_loss, mean_loss_grad, window_loss_grad, TrainObjective};
pub use config::{ModelConfig, FLUCTUATION_DECAY};
pub use forward::{
    decode, dynamic_adjust, encode, forward_inputs, forward_window, fuse_state, gate_fuse,
    propagate, step, ForwardTrace, HiddenState,
};
pub use loss::loss;
pub use params::{slot, ModelParams};
pub use persist::{SavedModel, MODEL_FORMAT_VERSION};
pub use predict::predict;
pub use train::{train, train_from, EpochLog, TrainConfig, TrainingLog};
