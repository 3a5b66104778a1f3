use numgrad::{Tape, Tensor};
use serde::{Deserialize, Serialize};

use super::features::extract_features;
use super::heads::{adam, cross_entropy, epoch_batches, ClassifierHead, HeadTrainConfig};
use crate::encoder::{forward, unpatchify, Encoder, EncoderConfig};
use crate::store::{InMemoryDataset, Split};
use crate::{Error, Result};

/// End-to-end supervised baseline: an encoder without calibration input
/// trained jointly with a classifier head on a single sensor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScratchConfig {
    pub encoder: EncoderConfig,
    pub steps: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub seed: u64,
}

pub fn train_scratch_classifier(
    data: &InMemoryDataset,
    sensor: usize,
    cfg: &ScratchConfig,
) -> Result<(Encoder, ClassifierHead)> {
    if cfg.encoder.k != 0 || data.k() != 0 {
        return Err(Error::config("the scratch baseline runs without calibration input"));
    }
    let idx = data.manifest.contacts_in(Split::Train);
    if idx.is_empty() {
        return Err(Error::Contract("no training samples".into()));
    }
    let ecfg = &cfg.encoder;
    let mut enc = Encoder::new(ecfg.clone(), cfg.seed)?;
    let feat_c = ecfg.embed_dim / (ecfg.patch_size * ecfg.patch_size);
    let mut head = ClassifierHead::new(feat_c, ecfg.embed_dim, data.manifest.classes.len(), cfg.seed);
    let mut opt = adam(&HeadTrainConfig { lr: cfg.lr, ..HeadTrainConfig::default() });
    let h = data.image_size;
    let mut step = 0;
    let mut epoch = 0;
    while step < cfg.steps {
        for batch in epoch_batches(idx.len(), cfg.batch_size, cfg.seed, epoch) {
            if step >= cfg.steps {
                break;
            }
            let rows: Vec<usize> = batch.iter().map(|&b| idx[b]).collect();
            let labels: Vec<usize> = rows.iter().map(|&c| data.manifest.contacts[c].class_label).collect();
            let images: Vec<f32> = rows.iter().flat_map(|&c| data.signals[sensor][c].iter().copied()).collect();
            let mut t = Tape::<f32>::new();
            let pe = enc.bind(&mut t, true);
            let ph = head.params.bind(&mut t, true);
            let x = t.constant(Tensor::new(vec![rows.len(), h, h, 3], images)?);
            let out = forward(&mut t, ecfg, &pe, x, None)?;
            let fmap = unpatchify(&mut t, out.tokens, ecfg.patch_size)?;
            let logits = ClassifierHead::logits(&mut t, &ph, fmap, out.z)?;
            let loss = cross_entropy(&mut t, logits, &labels)?;
            if !t.value(loss).item().is_finite() {
                return Err(Error::NonFinite { step: step as u64 });
            }
            t.backward(loss)?;
            opt.begin_step();
            for (name, v) in &pe.vars {
                if let Some(g) = t.grad(*v) {
                    let g = g.to_vec();
                    opt.update(&format!("enc/{name}"), enc.params.tensors.get_mut(name).expect("bound").data_mut(), &g);
                }
            }
            head.params.apply_grads(&t, &ph, &mut opt, "head/");
            step += 1;
        }
        epoch += 1;
    }
    Ok((enc, head))
}

/// Accuracy on every sensor's evaluation split.
pub fn classifier_accuracies(enc: &Encoder, head: &ClassifierHead, data: &InMemoryDataset) -> Result<Vec<f64>> {
    let idx = data.manifest.contacts_in(Split::Eval);
    if idx.is_empty() {
        return Err(Error::Contract("no evaluation samples".into()));
    }
    (0..data.n_sensors())
        .map(|s| {
            let f = extract_features(enc, data, s)?;
            let pred = head.predict(&f, &idx)?;
            let hits = pred.iter().zip(&idx).filter(|(p, &i)| **p == data.manifest.contacts[i].class_label).count();
            Ok(hits as f64 / idx.len() as f64)
        })
        .collect()
}
