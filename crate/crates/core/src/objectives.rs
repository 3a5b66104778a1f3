//! Training losses: normal-map reconstruction and supervised contrastive.

use numgrad::{Scalar, Tape, Tensor, Var};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

const SELF_MASK: f64 = -1e9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub lambda_normal: f64,
    pub lambda_scl: f64,
    pub tau: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights { lambda_normal: 1.0, lambda_scl: 1.0, tau: 0.07 }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0) {
            return Err(Error::config(format!("temperature must be positive, got {}", self.tau)));
        }
        if !(self.lambda_normal >= 0.0 && self.lambda_scl >= 0.0) {
            return Err(Error::config("loss weights must be non-negative"));
        }
        Ok(())
    }
}

/// Mean squared error over batch, pixels and channels.
pub fn normal_loss<T: Scalar>(tape: &mut Tape<T>, pred: Var, target: Var) -> Result<Var> {
    if tape.dims(pred) != tape.dims(target) {
        return Err(numgrad::TensorError::shape("normal_loss", tape.dims(pred), tape.dims(target)).into());
    }
    let d = tape.sub(pred, target)?;
    let sq = tape.mul(d, d)?;
    Ok(tape.mean(sq))
}

/// Per-anchor positive weights `1/|P(i)|`, with anchors lacking positives
/// left out. Returns the `[B, B]` weight matrix and the anchor count.
pub fn positive_weights(labels: &[usize]) -> (Vec<f64>, usize) {
    let b = labels.len();
    let mut w = vec![0.0; b * b];
    let mut anchors = 0;
    for i in 0..b {
        let pos: Vec<usize> = (0..b).filter(|&p| p != i && labels[p] == labels[i]).collect();
        if pos.is_empty() {
            continue;
        }
        anchors += 1;
        for p in pos.iter() {
            w[i * b + p] = 1.0 / pos.len() as f64;
        }
    }
    (w, anchors)
}

/// Supervised contrastive loss over `[B, E]` embeddings, averaged over
/// anchors that have at least one positive.
pub fn scl_loss<T: Scalar>(tape: &mut Tape<T>, embeddings: Var, labels: &[usize], tau: f64) -> Result<Var> {
    if !(tau > 0.0) {
        return Err(Error::config(format!("temperature must be positive, got {tau}")));
    }
    let dims = tape.dims(embeddings).to_vec();
    let b = dims[0];
    if dims.len() != 2 || b != labels.len() {
        return Err(Error::Contract(format!("embeddings {dims:?} for {} labels", labels.len())));
    }
    if b < 2 {
        return Err(Error::config("contrastive loss needs at least 2 samples"));
    }
    let (w, anchors) = positive_weights(labels);
    if anchors < b {
        log::debug!("contrastive loss: {} of {b} anchors have no positive and are skipped", b - anchors);
    }
    if anchors == 0 {
        log::warn!("contrastive loss: no anchor has a positive; loss is zero");
        return Ok(tape.constant(Tensor::scalar(T::zero())));
    }
    let sim = tape.matmul_nt(embeddings, embeddings)?;
    let sim = tape.scale(sim, T::of(1.0 / tau));
    let mask = tape.constant(Tensor::from_fn(vec![b, b], |i| T::of(if i / b == i % b { SELF_MASK } else { 0.0 })));
    let logits = tape.add(sim, mask)?;
    let logp = tape.log_softmax(logits, 1)?;
    let weights = tape.constant(Tensor::new(vec![b, b], w.iter().map(|&v| T::of(-v / anchors as f64)).collect())?);
    let terms = tape.mul(logp, weights)?;
    Ok(tape.sum(terms))
}

/// `λ_normal·l_normal + λ_scl·l_scl` on the tape.
pub fn total_loss<T: Scalar>(tape: &mut Tape<T>, l_normal: Var, l_scl: Var, w: &LossWeights) -> Result<Var> {
    let a = tape.scale(l_normal, T::of(w.lambda_normal));
    let b = tape.scale(l_scl, T::of(w.lambda_scl));
    Ok(tape.add(a, b)?)
}

/// Scalar form of [`total_loss`].
pub fn combine(l_normal: f64, l_scl: f64, w: &LossWeights) -> f64 {
    w.lambda_normal * l_normal + w.lambda_scl * l_scl
}
