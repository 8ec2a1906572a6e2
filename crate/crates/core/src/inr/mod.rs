//! Hash-encoded implicit neural representation.
//!
//! `f(r) = MLP(encode(r))`, trained by minimizing
//! `(1/N) ||y - f(z)||^2 + lambda_enc ||theta_enc||^2 + lambda_mlp ||theta_mlp||^2`
//! with full-batch Adam. The penalty is part of the differentiated loss
//! (coupled weight decay). MLP biases count towards `theta_mlp`.

mod adam;
pub mod encoder;
mod gemm;
mod grad;
mod model;
mod train;

pub use adam::{AdamConfig, AdamState};
pub use encoder::{hash_index, EncoderConfig};
pub use grad::{loss_and_grad, LossParts, Objective};
pub use model::{Architecture, InrModel, ParamLayout};
pub use train::{train, TrainConfig, Trained};
