use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub image_size: usize,
    pub patch_size: usize,
    pub embed_dim: usize,
    pub depth: usize,
    pub num_heads: usize,
    /// Number of calibration images stacked per sample.
    pub k: usize,
    pub channels: usize,
    pub embed_out: usize,
    pub mlp_ratio: usize,
}

impl EncoderConfig {
    /// Small configuration used for CPU-scale experiments.
    pub fn desk(k: usize) -> Self {
        EncoderConfig {
            image_size: 64,
            patch_size: 8,
            embed_dim: 128,
            depth: 4,
            num_heads: 4,
            k,
            channels: 3,
            embed_out: 128,
            mlp_ratio: 4,
        }
    }

    /// ViT-Base sized configuration at 224².
    pub fn base(k: usize) -> Self {
        EncoderConfig {
            image_size: 224,
            patch_size: 16,
            embed_dim: 768,
            depth: 12,
            num_heads: 12,
            ..Self::desk(k)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::config(m));
        if self.patch_size == 0 || self.image_size % self.patch_size != 0 {
            return bad(format!("image size {} not divisible by patch {}", self.image_size, self.patch_size));
        }
        if self.num_heads == 0 || self.embed_dim % self.num_heads != 0 {
            return bad(format!("embed dim {} not divisible by {} heads", self.embed_dim, self.num_heads));
        }
        if self.embed_dim % 4 != 0 {
            return bad(format!("embed dim {} must be a multiple of 4 for 2D sin-cos positions", self.embed_dim));
        }
        if self.channels == 0 || self.embed_out == 0 || self.mlp_ratio == 0 {
            return bad("channels, embed_out and mlp_ratio must be positive".into());
        }
        Ok(())
    }

    pub fn grid(&self) -> usize {
        self.image_size / self.patch_size
    }

    /// Tokens per patch stream.
    pub fn n_tokens(&self) -> usize {
        self.grid() * self.grid()
    }

    pub fn seq_len(&self) -> usize {
        1 + self.n_tokens() + if self.k > 0 { self.n_tokens() } else { 0 }
    }

    pub fn patch_dim(&self) -> usize {
        self.patch_size * self.patch_size * self.channels
    }

    pub fn parameter_count(&self) -> usize {
        let d = self.embed_dim;
        let p2c = self.patch_dim();
        let hidden = self.mlp_ratio * d;
        let tactile = p2c * d + d;
        let calib = if self.k > 0 { self.k * p2c * d + d } else { 0 };
        let block = 4 * d + (3 * d * d + 3 * d) + (d * d + d) + (d * hidden + hidden) + (hidden * d + d);
        let heads = (d * p2c + p2c) + (d * self.embed_out + self.embed_out);
        tactile + calib + d + 2 * d + self.depth * block + 2 * d + heads
    }
}
