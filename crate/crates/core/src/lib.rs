//! Sensor-invariant tactile representation pipeline.
//!
//! - [`optics`]: parameterized optical tactile-sensor simulator (imprint,
//!   normals, local shading, calibration presses).
//! - [`store`]: TNSR tensors, dataset manifests, sensor-aligned generation,
//!   pre-processing, augmentation and two-view batching.
//! - [`encoder`]: calibration-conditioned transformer encoder with normal-map
//!   and embedding heads.
//! - [`objectives`]: normal reconstruction MSE and supervised contrastive loss.
//! - [`train`]: pre-training loop.
//! - [`eval`]: downstream heads, cross-sensor transfer matrices, height
//!   reconstruction, embedding export and ablation sweeps.

pub mod encoder;
pub mod error;
pub mod eval;
pub mod filters;
pub mod objectives;
pub mod optics;
pub mod seed;
pub mod store;
pub mod train;

pub use error::{Error, Result};
