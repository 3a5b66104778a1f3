//! Downstream decoders over frozen representations.

use std::collections::BTreeMap;

use numgrad::{Adam, AdamConfig, Scalar, Tape, Tensor, Var};
use rand::seq::SliceRandom;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::seed::rng_for;
use crate::{Error, Result};

const CONV_CHANNELS: [usize; 3] = [32, 64, 128];
const MLP_HIDDEN: [usize; 2] = [256, 128];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeadTrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub seed: u64,
}

impl Default for HeadTrainConfig {
    fn default() -> Self {
        HeadTrainConfig { epochs: 30, batch_size: 32, lr: 1e-3, seed: 0 }
    }
}

/// Named head parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct HeadParams {
    pub tensors: BTreeMap<String, Tensor<f32>>,
}

impl HeadParams {
    fn build(shapes: &[(String, Vec<usize>, usize)], seed: u64) -> Self {
        let tensors = shapes
            .iter()
            .map(|(name, dims, fan_in)| {
                let n: usize = dims.iter().product();
                let t = if *fan_in == 0 {
                    Tensor::zeros(dims.clone())
                } else {
                    let normal = Normal::new(0.0, (2.0 / *fan_in as f64).sqrt()).expect("positive std");
                    let mut rng = rng_for(seed, &format!("head/{name}"));
                    Tensor::new(dims.clone(), (0..n).map(|_| normal.sample(&mut rng) as f32).collect()).expect("sized")
                };
                (name.clone(), t)
            })
            .collect();
        HeadParams { tensors }
    }

    pub fn bind<T: Scalar>(&self, tape: &mut Tape<T>, trainable: bool) -> BTreeMap<String, Var> {
        self.tensors.iter().map(|(n, t)| (n.clone(), tape.leaf(t.cast(), trainable))).collect()
    }

    /// One Adam update from the gradients recorded on `tape`.
    pub fn apply_grads(&mut self, tape: &Tape<f32>, vars: &BTreeMap<String, Var>, opt: &mut Adam<f32>, prefix: &str) {
        for (name, v) in vars {
            if let Some(g) = tape.grad(*v) {
                let g = g.to_vec();
                opt.update(&format!("{prefix}{name}"), self.tensors.get_mut(name).expect("bound").data_mut(), &g);
            }
        }
    }

    pub fn count(&self) -> usize {
        self.tensors.values().map(Tensor::len).sum()
    }
}

fn conv_shapes(in_channels: usize) -> Vec<(String, Vec<usize>, usize)> {
    let mut out = Vec::new();
    let mut c = in_channels;
    for (i, &o) in CONV_CHANNELS.iter().enumerate() {
        out.push((format!("conv{i}.w"), vec![3, 3, c, o], 9 * c));
        out.push((format!("conv{i}.b"), vec![o], 0));
        c = o;
    }
    out
}

fn linear<T: Scalar>(tape: &mut Tape<T>, p: &BTreeMap<String, Var>, name: &str, x: Var) -> Result<Var> {
    let y = tape.matmul(x, p[&format!("{name}.w")])?;
    Ok(tape.add(y, p[&format!("{name}.b")])?)
}

/// Three stride-2 convolutions with ReLU, then global average pooling.
fn conv_stack<T: Scalar>(tape: &mut Tape<T>, p: &BTreeMap<String, Var>, x: Var) -> Result<Var> {
    let mut x = x;
    for i in 0..CONV_CHANNELS.len() {
        x = tape.conv2d(x, p[&format!("conv{i}.w")], p[&format!("conv{i}.b")], 2, 1)?;
        x = tape.relu(x);
    }
    let d = tape.dims(x).to_vec();
    let x = tape.reshape(x, &[d[0], d[1] * d[2], d[3]])?;
    Ok(tape.mean_axis(x, 1)?)
}

/// Conv stack over the token feature map, pooled, joined with the class
/// token and classified by a three-layer MLP.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassifierHead {
    pub params: HeadParams,
    pub n_classes: usize,
}

impl ClassifierHead {
    pub fn new(feat_channels: usize, z_dim: usize, n_classes: usize, seed: u64) -> Self {
        let mut shapes = conv_shapes(feat_channels);
        let mut width = CONV_CHANNELS[2] + z_dim;
        for (i, &h) in MLP_HIDDEN.iter().chain(std::iter::once(&n_classes)).enumerate() {
            shapes.push((format!("fc{i}.w"), vec![width, h], width));
            shapes.push((format!("fc{i}.b"), vec![h], 0));
            width = h;
        }
        ClassifierHead { params: HeadParams::build(&shapes, seed), n_classes }
    }

    /// Logits `[B, n_classes]` from feature maps `[B, H, W, c]` and class tokens `[B, D]`.
    pub fn logits<T: Scalar>(tape: &mut Tape<T>, p: &BTreeMap<String, Var>, fmap: Var, z: Var) -> Result<Var> {
        let pooled = conv_stack(tape, p, fmap)?;
        let mut x = tape.concat(&[pooled, z], 1)?;
        for i in 0..3 {
            x = linear(tape, p, &format!("fc{i}"), x)?;
            if i < 2 {
                x = tape.relu(x);
            }
        }
        Ok(x)
    }
}

/// Regresses the displacement between two presses from their stacked
/// feature maps.
#[derive(Clone, Debug, PartialEq)]
pub struct PoseHead {
    pub params: HeadParams,
}

impl PoseHead {
    pub fn new(feat_channels: usize, seed: u64) -> Self {
        let mut shapes = conv_shapes(2 * feat_channels);
        shapes.push(("out.w".into(), vec![CONV_CHANNELS[2], 3], CONV_CHANNELS[2]));
        shapes.push(("out.b".into(), vec![3], 0));
        PoseHead { params: HeadParams::build(&shapes, seed) }
    }

    /// `[B, 3]` estimate of `pose(second) − pose(first)` in millimeters.
    pub fn predict<T: Scalar>(tape: &mut Tape<T>, p: &BTreeMap<String, Var>, first: Var, second: Var) -> Result<Var> {
        let x = tape.concat(&[first, second], 3)?;
        let pooled = conv_stack(tape, p, x)?;
        linear(tape, p, "out", pooled)
    }
}

/// Mean cross-entropy of `logits [B, C]` against integer labels.
pub fn cross_entropy<T: Scalar>(tape: &mut Tape<T>, logits: Var, labels: &[usize]) -> Result<Var> {
    let d = tape.dims(logits).to_vec();
    let (b, c) = (d[0], d[1]);
    if labels.len() != b || labels.iter().any(|&l| l >= c) {
        return Err(Error::Contract(format!("{} labels for logits {d:?}", labels.len())));
    }
    let logp = tape.log_softmax(logits, 1)?;
    let w = Tensor::from_fn(vec![b, c], |i| if labels[i / c] == i % c { T::of(-1.0 / b as f64) } else { T::zero() });
    let w = tape.constant(w);
    let t = tape.mul(logp, w)?;
    Ok(tape.sum(t))
}

/// Mean squared error between `[B, 3]` predictions and targets.
pub fn mse<T: Scalar>(tape: &mut Tape<T>, pred: Var, target: Var) -> Result<Var> {
    let d = tape.sub(pred, target)?;
    let sq = tape.mul(d, d)?;
    Ok(tape.mean(sq))
}

/// Mini-batch schedule: shuffled index chunks for each epoch.
pub fn epoch_batches(n: usize, batch: usize, seed: u64, epoch: usize) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng_for(seed, &format!("head-epoch/{epoch}")));
    order.chunks(batch.max(1)).map(<[usize]>::to_vec).collect()
}

pub fn adam(cfg: &HeadTrainConfig) -> Adam<f32> {
    Adam::new(AdamConfig { lr: cfg.lr, ..AdamConfig::default() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapes_through_heads() {
        let head = ClassifierHead::new(2, 16, 6, 0);
        let mut t = Tape::<f32>::new();
        let p = head.params.bind(&mut t, false);
        let f = t.constant(Tensor::ones(vec![3, 16, 16, 2]));
        let z = t.constant(Tensor::ones(vec![3, 16]));
        let l = ClassifierHead::logits(&mut t, &p, f, z).unwrap();
        assert_eq!(t.dims(l), &[3, 6]);
        let pose = PoseHead::new(2, 0);
        let p = pose.params.bind(&mut t, false);
        let o = PoseHead::predict(&mut t, &p, f, f).unwrap();
        assert_eq!(t.dims(o), &[3, 3]);
    }

    #[test]
    fn cross_entropy_of_uniform_logits() {
        let mut t = Tape::<f64>::new();
        let l = t.constant(Tensor::zeros(vec![4, 5]));
        let ce = cross_entropy(&mut t, l, &[0, 1, 2, 4]).unwrap();
        assert!((t.value(ce).item() - 5f64.ln()).abs() < 1e-12);
        assert!(cross_entropy(&mut t, l, &[0, 1, 2, 5]).is_err());
    }
}
