//! Spatio-temporal backpropagation: rate-coded loss, the backward pass
//! through layers and timesteps, and mini-batch SGD training.

mod backward;
mod loss;
mod train;

pub use backward::{backward_pass, Gradients};
pub use loss::{predict, rate_loss, regularized_loss, LabelVector};
pub use train::{
    evaluate, sgd_step, train, EpochRecord, Evaluation, History, NoHooks, TrainConfig, TrainHooks,
    Trainer,
};
