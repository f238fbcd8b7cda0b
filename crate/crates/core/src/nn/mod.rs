//! Dense MLP with batch normalization and hand-written backpropagation.

mod loss;
mod mlp;

pub use loss::{ce_loss, ce_per_sample, mse_loss, mse_per_sample, softmax_rows};
pub use mlp::{
    BatchNorm, ForwardCache, Gradients, HiddenBlock, Inputs, Linear, MlpConfig, MlpModel, Mode, BN_EPS, BN_MOMENTUM,
};
