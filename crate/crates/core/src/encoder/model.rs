use std::collections::BTreeMap;
use std::path::Path;

use numgrad::{Scalar, Tape, Tensor, Var};

use super::config::EncoderConfig;
use super::params::{load_checkpoint, save_checkpoint, Params};
use super::patch::{patchify, sincos_2d, unpatchify};
use crate::{Error, Result};

const LN_EPS: f64 = 1e-5;
const EMBED_EPS: f64 = 1e-8;

/// The calibration-conditioned transformer encoder.
#[derive(Clone, Debug, PartialEq)]
pub struct Encoder {
    pub config: EncoderConfig,
    pub params: Params,
    /// Fixed positional table shared by both patch streams, `[N, D]`.
    pub pos_table: Tensor<f32>,
}

/// Encoder parameters placed on a tape.
pub struct Bound {
    pub vars: BTreeMap<String, Var>,
    pub pos: Var,
}

impl Bound {
    pub fn var(&self, name: &str) -> Var {
        self.vars[name]
    }
}

/// Outputs of one forward pass, all batched.
#[derive(Clone, Copy, Debug)]
pub struct ForwardOut {
    /// Output class token `[B, D]`.
    pub z: Var,
    /// Output tactile tokens `[B, N, D]`.
    pub tokens: Var,
}

/// Frozen representation values for a batch.
#[derive(Clone, Debug, PartialEq)]
pub struct Representation {
    pub z: Tensor<f32>,
    pub tokens: Tensor<f32>,
    pub embed: Tensor<f32>,
}

impl Encoder {
    pub fn new(config: EncoderConfig, seed: u64) -> Result<Self> {
        let params = Params::init(&config, seed)?;
        Self::from_params(config, params)
    }

    pub fn from_params(config: EncoderConfig, params: Params) -> Result<Self> {
        config.validate()?;
        let expected = Params::init(&config, 0)?;
        for (name, t) in &expected.tensors {
            if params.get(name)?.dims() != t.dims() {
                return Err(Error::Contract(format!("parameter {name} has the wrong shape")));
            }
        }
        if params.tensors.len() != expected.tensors.len() {
            return Err(Error::Contract("unexpected parameters for this configuration".into()));
        }
        let pos_table = sincos_2d(config.grid(), config.embed_dim);
        Ok(Encoder { config, params, pos_table })
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let (cfg, params) = load_checkpoint(dir)?;
        Self::from_params(cfg, params)
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        save_checkpoint(dir, &self.config, &self.params)
    }

    /// Pushes parameters (trainable or frozen) onto `tape`.
    pub fn bind<T: Scalar>(&self, tape: &mut Tape<T>, trainable: bool) -> Bound {
        let vars = self
            .params
            .tensors
            .iter()
            .map(|(name, t)| (name.clone(), tape.leaf(t.cast(), trainable)))
            .collect();
        let pos = tape.constant(self.pos_table.cast());
        Bound { vars, pos }
    }

    /// Frozen forward pass in chunks of `chunk` samples.
    pub fn represent(&self, images: &Tensor<f32>, calib: Option<&Tensor<f32>>, chunk: usize) -> Result<Representation> {
        let b = images.dims()[0];
        let cfg = &self.config;
        let (mut z, mut tokens, mut embed) = (Vec::new(), Vec::new(), Vec::new());
        let img_row = images.len() / b.max(1);
        let cal_row = calib.map(|c| c.len() / b.max(1)).unwrap_or(0);
        for start in (0..b).step_by(chunk.max(1)) {
            let n = chunk.max(1).min(b - start);
            let mut tape = Tape::<f32>::new();
            let bound = self.bind(&mut tape, false);
            let mut dims = images.dims().to_vec();
            dims[0] = n;
            let x = tape.constant(Tensor::new(dims, images.data()[start * img_row..(start + n) * img_row].to_vec())?);
            let c = match calib {
                Some(c) => {
                    let mut dims = c.dims().to_vec();
                    dims[0] = n;
                    Some(tape.constant(Tensor::new(dims, c.data()[start * cal_row..(start + n) * cal_row].to_vec())?))
                }
                None => None,
            };
            let out = forward(&mut tape, cfg, &bound, x, c)?;
            let e = embed_class(&mut tape, cfg, &bound, out.z)?;
            z.extend_from_slice(tape.data(out.z));
            tokens.extend_from_slice(tape.data(out.tokens));
            embed.extend_from_slice(tape.data(e));
        }
        let (d, nt) = (cfg.embed_dim, cfg.n_tokens());
        Ok(Representation {
            z: Tensor::new(vec![b, d], z)?,
            tokens: Tensor::new(vec![b, nt, d], tokens)?,
            embed: Tensor::new(vec![b, cfg.embed_out], embed)?,
        })
    }
}

fn linear<T: Scalar>(tape: &mut Tape<T>, x: Var, w: Var, b: Var) -> Result<Var> {
    let y = tape.matmul(x, w)?;
    Ok(tape.add(y, b)?)
}

/// Builds `[class, tactile patches, calibration patches]` tokens, `[B, L, D]`.
pub fn tokenize<T: Scalar>(
    tape: &mut Tape<T>,
    cfg: &EncoderConfig,
    p: &Bound,
    images: Var,
    calib: Option<Var>,
) -> Result<Var> {
    let dims = tape.dims(images).to_vec();
    let (h, c) = (cfg.image_size, cfg.channels);
    if dims.len() != 4 || dims[1] != h || dims[2] != h || dims[3] != c {
        return Err(Error::config(format!("tactile input {dims:?}, expected [B, {h}, {h}, {c}]")));
    }
    let b = dims[0];
    let d = cfg.embed_dim;
    let types = p.var("stream_type");
    let stream = |tape: &mut Tape<T>, x: Var, proj: &str, type_row: usize| -> Result<Var> {
        let patches = patchify(tape, x, cfg.patch_size)?;
        let t = linear(tape, patches, p.var(&format!("{proj}.w")), p.var(&format!("{proj}.b")))?;
        let t = tape.add(t, p.pos)?;
        let row = tape.slice(types, 0, type_row, 1)?;
        let row = tape.reshape(row, &[d])?;
        Ok(tape.add(t, row)?)
    };
    let mut parts = Vec::with_capacity(3);
    let zeros = tape.constant(Tensor::zeros(vec![b, 1, d]));
    parts.push(tape.add(zeros, p.var("cls"))?);
    parts.push(stream(tape, images, "tactile_proj", 0)?);
    match (cfg.k, calib) {
        (0, None) => {}
        (0, Some(_)) => return Err(Error::config("calibration stack given to a K=0 encoder")),
        (_, None) => return Err(Error::config(format!("encoder expects {} calibration images", cfg.k))),
        (k, Some(cv)) => {
            let cd = tape.dims(cv).to_vec();
            if cd != [b, h, h, k * c] {
                return Err(Error::config(format!("calibration stack {cd:?}, expected [{b}, {h}, {h}, {}]", k * c)));
            }
            parts.push(stream(tape, cv, "calib_proj", 1)?);
        }
    }
    Ok(tape.concat(&parts, 1)?)
}

fn attention<T: Scalar>(tape: &mut Tape<T>, cfg: &EncoderConfig, p: &Bound, i: usize, x: Var) -> Result<Var> {
    let dims = tape.dims(x).to_vec();
    let (b, l, d) = (dims[0], dims[1], dims[2]);
    let (nh, hd) = (cfg.num_heads, d / cfg.num_heads);
    let qkv = linear(tape, x, p.var(&format!("blocks.{i}.attn.qkv.w")), p.var(&format!("blocks.{i}.attn.qkv.b")))?;
    let qkv = tape.reshape(qkv, &[b, l, 3, nh, hd])?;
    let qkv = tape.permute(qkv, &[2, 0, 3, 1, 4])?;
    let mut heads = Vec::with_capacity(3);
    for j in 0..3 {
        let s = tape.slice(qkv, 0, j, 1)?;
        heads.push(tape.reshape(s, &[b, nh, l, hd])?);
    }
    let scores = tape.matmul_nt(heads[0], heads[1])?;
    let scores = tape.scale(scores, T::of(1.0 / (hd as f64).sqrt()));
    let attn = tape.softmax(scores, 3)?;
    let out = tape.matmul(attn, heads[2])?;
    let out = tape.permute(out, &[0, 2, 1, 3])?;
    let out = tape.reshape(out, &[b, l, d])?;
    linear(tape, out, p.var(&format!("blocks.{i}.attn.proj.w")), p.var(&format!("blocks.{i}.attn.proj.b")))
}

/// Pre-norm transformer blocks and final layer norm; shape-preserving.
pub fn encode<T: Scalar>(tape: &mut Tape<T>, cfg: &EncoderConfig, p: &Bound, seq: Var) -> Result<Var> {
    let mut x = seq;
    for i in 0..cfg.depth {
        let n = |s: &str| p.var(&format!("blocks.{i}.{s}"));
        let h = tape.layernorm(x, n("ln1.g"), n("ln1.b"), LN_EPS)?;
        let a = attention(tape, cfg, p, i, h)?;
        x = tape.add(x, a)?;
        let h = tape.layernorm(x, n("ln2.g"), n("ln2.b"), LN_EPS)?;
        let h = linear(tape, h, n("mlp.fc1.w"), n("mlp.fc1.b"))?;
        let h = tape.gelu(h);
        let h = linear(tape, h, n("mlp.fc2.w"), n("mlp.fc2.b"))?;
        x = tape.add(x, h)?;
    }
    Ok(tape.layernorm(x, p.var("ln_f.g"), p.var("ln_f.b"), LN_EPS)?)
}

/// Splits encoder output into the class token and tactile tokens.
pub fn split_outputs<T: Scalar>(tape: &mut Tape<T>, cfg: &EncoderConfig, out: Var) -> Result<ForwardOut> {
    let d = tape.dims(out).to_vec();
    let (b, dim) = (d[0], d[2]);
    let z = tape.slice(out, 1, 0, 1)?;
    let z = tape.reshape(z, &[b, dim])?;
    let tokens = tape.slice(out, 1, 1, cfg.n_tokens())?;
    Ok(ForwardOut { z, tokens })
}

/// Tokenize, encode and split: the frozen representation used downstream.
pub fn forward<T: Scalar>(
    tape: &mut Tape<T>,
    cfg: &EncoderConfig,
    p: &Bound,
    images: Var,
    calib: Option<Var>,
) -> Result<ForwardOut> {
    let seq = tokenize(tape, cfg, p, images, calib)?;
    let out = encode(tape, cfg, p, seq)?;
    split_outputs(tape, cfg, out)
}

/// Linear per-token projection unpatchified to `[B, H, W, 3]`.
pub fn decode_normal<T: Scalar>(tape: &mut Tape<T>, cfg: &EncoderConfig, p: &Bound, tokens: Var) -> Result<Var> {
    let n = tape.dims(tokens)[1];
    if n != cfg.n_tokens() {
        return Err(Error::Contract(format!("{n} tactile tokens, expected {}", cfg.n_tokens())));
    }
    let y = linear(tape, tokens, p.var("normal_head.w"), p.var("normal_head.b"))?;
    unpatchify(tape, y, cfg.patch_size)
}

/// Unit-norm embedding of the class token, `[B, embed_out]`.
pub fn embed_class<T: Scalar>(tape: &mut Tape<T>, _cfg: &EncoderConfig, p: &Bound, z: Var) -> Result<Var> {
    let e = linear(tape, z, p.var("embed_head.w"), p.var("embed_head.b"))?;
    Ok(tape.l2_normalize(e, EMBED_EPS)?)
}
