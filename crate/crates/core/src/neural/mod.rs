//! The learnable stack: encoder, Gumbel-Softmax bottleneck, local update rule, readout.

pub mod checkpoint;
pub mod model;
pub mod nca;
pub mod ops;

pub use checkpoint::Checkpoint;
pub use model::{NcaConfig, NcaModel, Params};
pub use nca::{encode, loss_and_grad, nca_step, predict, readout, rollout, BatchInput, LossOptions, LossReport, Mode};
