//! Calibration-conditioned transformer encoder.

mod config;
mod model;
mod params;
mod patch;

pub use config::EncoderConfig;
pub use model::{
    decode_normal, embed_class, encode, forward, split_outputs, tokenize, Bound, Encoder, ForwardOut, Representation,
};
pub use params::{checkpoint_digest, load_checkpoint, save_checkpoint, Params};
pub use patch::{patchify, patchify_tensor, sincos_2d, unpatchify, unpatchify_tensor};
