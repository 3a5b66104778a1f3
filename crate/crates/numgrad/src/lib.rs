//! Dense row-major tensors with a Wengert-tape reverse-mode autodiff engine.
//!
//! Values live in [`Tensor`]; differentiable computation is recorded on a
//! [`Tape`], which hands out [`Var`] handles. Every operation is generic over
//! [`Scalar`] so the same graph code runs in `f32` for training and in `f64`
//! for gradient checking.

mod backward;
mod error;
pub mod optim;
mod ops;
mod scalar;
mod tape;
mod tensor;

pub use error::TensorError;
pub use optim::{adam_step, Adam, AdamConfig};
pub use scalar::Scalar;
pub use tape::{Tape, Var};
pub use tensor::{permute_data, Tensor};

pub type Result<T, E = TensorError> = std::result::Result<T, E>;
