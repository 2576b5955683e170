//! Deep Q-learning for switch selection.
//!
//! No replay buffer: each episode's transitions are applied as online gradient
//! steps right after the episode ends, with bootstrap targets taken from a
//! periodically synchronised copy of the network.

mod mlp;
mod policy;
mod train;

pub use mlp::{Activation, Dense, Gradients, QFunction};
pub use policy::{
    bellman_target, greedy_action, mse_batch, mse_loss, select_action, EpsilonSchedule, TargetSign,
};
pub use train::{
    backprop_update, best_configuration, greedy_rollout, running_mean, running_mean_sparse, train,
    train_with, BestConfiguration, EpisodeRecord, TrainConfig, TrainOutcome, Transition,
};
