//! Pre-training on two-view sensor-aligned batches.

use std::io::Write;
use std::path::Path;

use numgrad::{Adam, AdamConfig, Tape, Tensor};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::encoder::{decode_normal, embed_class, forward, Encoder, EncoderConfig};
use crate::error::IoContext;
use crate::objectives::{normal_loss, scl_loss, total_loss, LossWeights};
use crate::seed::rng_for;
use crate::store::{make_aligned_batch, Batch, InMemoryDataset};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PretrainConfig {
    pub encoder: EncoderConfig,
    pub weights: LossWeights,
    pub epochs: usize,
    /// Contacts per batch; each contributes two views.
    pub batch_contacts: usize,
    pub lr: f64,
    pub seed: u64,
    pub augment: bool,
    /// Stops early once this many optimizer steps have run.
    pub max_steps: Option<usize>,
}

impl PretrainConfig {
    pub fn new(encoder: EncoderConfig) -> Self {
        PretrainConfig {
            encoder,
            weights: LossWeights::default(),
            epochs: 1,
            batch_contacts: 16,
            lr: AdamConfig::default().lr,
            seed: 0,
            augment: true,
            max_steps: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepLoss {
    pub step: u64,
    pub l_normal: f64,
    pub l_scl: f64,
    pub total: f64,
}

/// Losses of one optimizer step plus gradients by parameter name.
pub struct StepResult {
    pub loss: StepLoss,
    pub grads: Vec<(String, Vec<f32>)>,
}

/// Forward and backward pass of the full objective on `batch`.
pub fn loss_and_grads(enc: &Encoder, batch: &Batch, w: &LossWeights, step: u64) -> Result<StepResult> {
    let cfg = &enc.config;
    let (b, h) = (batch.len(), batch.size);
    let mut tape = Tape::<f32>::new();
    let p = enc.bind(&mut tape, true);
    let x = tape.constant(Tensor::new(vec![b, h, h, 3], batch.images.clone())?);
    let c = (cfg.k > 0).then(|| Tensor::new(vec![b, h, h, 3 * batch.k], batch.calib_stacks.clone()));
    let c = match c {
        Some(t) => Some(tape.constant(t?)),
        None => None,
    };
    let n = tape.constant(Tensor::new(vec![b, h, h, 3], batch.normals.clone())?);
    let out = forward(&mut tape, cfg, &p, x, c)?;
    let pred = decode_normal(&mut tape, cfg, &p, out.tokens)?;
    let ln = normal_loss(&mut tape, pred, n)?;
    let e = embed_class(&mut tape, cfg, &p, out.z)?;
    let ls = scl_loss(&mut tape, e, &batch.contact_labels, w.tau)?;
    let total = total_loss(&mut tape, ln, ls, w)?;
    let loss = StepLoss {
        step,
        l_normal: tape.value(ln).item() as f64,
        l_scl: tape.value(ls).item() as f64,
        total: tape.value(total).item() as f64,
    };
    if !loss.total.is_finite() {
        return Err(Error::NonFinite { step });
    }
    tape.backward(total)?;
    let grads = p
        .vars
        .iter()
        .map(|(name, v)| (name.clone(), tape.grad(*v).map(<[f32]>::to_vec).unwrap_or_default()))
        .collect();
    Ok(StepResult { loss, grads })
}

/// Trains a freshly initialized encoder; optionally streams a loss CSV.
pub fn pretrain(data: &InMemoryDataset, cfg: &PretrainConfig, log_csv: Option<&Path>) -> Result<(Encoder, Vec<StepLoss>)> {
    cfg.weights.validate()?;
    if cfg.encoder.k != data.k() || cfg.encoder.image_size != data.image_size {
        return Err(Error::config(format!(
            "encoder expects K={} at {}², dataset provides K={} at {}²",
            cfg.encoder.k,
            cfg.encoder.image_size,
            data.k(),
            data.image_size
        )));
    }
    if cfg.batch_contacts == 0 {
        return Err(Error::config("batch_contacts must be positive"));
    }
    let mut enc = Encoder::new(cfg.encoder.clone(), cfg.seed)?;
    let mut opt = Adam::<f32>::new(AdamConfig { lr: cfg.lr, ..AdamConfig::default() });
    let mut csv = match log_csv {
        Some(path) => {
            let mut f = std::io::BufWriter::new(std::fs::File::create(path).at(path)?);
            writeln!(f, "step,l_normal,l_scl,total").at(path)?;
            Some((f, path))
        }
        None => None,
    };
    let mut history = Vec::new();
    let mut step = 0u64;
    'outer: for epoch in 0..cfg.epochs {
        let mut order: Vec<usize> = (0..data.n_contacts()).collect();
        order.shuffle(&mut rng_for(cfg.seed, &format!("epoch/{epoch}")));
        for chunk in order.chunks(cfg.batch_contacts) {
            if cfg.max_steps.is_some_and(|m| step as usize >= m) {
                break 'outer;
            }
            if chunk.len() < 2 {
                continue;
            }
            let mut rng = rng_for(cfg.seed, &format!("batch/{step}"));
            let batch = make_aligned_batch(data, chunk, &mut rng, cfg.augment)?;
            let r = loss_and_grads(&enc, &batch, &cfg.weights, step)?;
            opt.begin_step();
            for (name, g) in &r.grads {
                let t = enc.params.tensors.get_mut(name).expect("bound from params");
                opt.update(name, t.data_mut(), g);
            }
            if let Some((f, path)) = csv.as_mut() {
                let l = &r.loss;
                writeln!(f, "{},{},{},{}", l.step, l.l_normal, l.l_scl, l.total).at(path)?;
            }
            if step % 25 == 0 {
                log::info!(
                    "epoch {epoch} step {step}: normal {:.4} scl {:.4} total {:.4}",
                    r.loss.l_normal,
                    r.loss.l_scl,
                    r.loss.total
                );
            }
            history.push(r.loss);
            step += 1;
        }
    }
    if let Some((mut f, path)) = csv {
        f.flush().at(path)?;
    }
    Ok((enc, history))
}
