use std::sync::OnceLock;

use numgrad::{Tape, Tensor};
use rayon::prelude::*;

use super::features::SensorFeatures;
use super::heads::{adam, cross_entropy, epoch_batches, mse, ClassifierHead, HeadTrainConfig, PoseHead};
use super::transfer::{MetricKind, TransferMatrix};
use crate::store::{DatasetManifest, Split};
use crate::{Error, Result};

/// A head fitted on one sensor's frozen features.
pub trait TrainedHead: Send + Sync {
    /// Task metric on `split` of another (or the same) sensor.
    fn score(&self, feats: &SensorFeatures, manifest: &DatasetManifest, split: Split) -> Result<f64>;
}

/// A downstream task evaluated through cross-sensor transfer.
pub trait DownstreamTask: Send + Sync {
    fn name(&self) -> &'static str;
    fn metric_kind(&self) -> MetricKind;
    /// Fails with a contract error when the dataset lacks this task's labels.
    fn check_labels(&self, manifest: &DatasetManifest) -> Result<()>;
    fn fit(&self, feats: &SensorFeatures, manifest: &DatasetManifest, cfg: &HeadTrainConfig)
        -> Result<Box<dyn TrainedHead>>;
}

pub struct Classification;

struct FittedClassifier(ClassifierHead);

impl ClassifierHead {
    pub fn predict(&self, feats: &SensorFeatures, idx: &[usize]) -> Result<Vec<usize>> {
        let mut out = Vec::with_capacity(idx.len());
        for chunk in idx.chunks(64) {
            let mut t = Tape::<f32>::new();
            let p = self.params.bind(&mut t, false);
            let f = t.constant(feats.fmap_batch(chunk));
            let z = t.constant(feats.z_batch(chunk));
            let l = ClassifierHead::logits(&mut t, &p, f, z)?;
            for row in t.data(l).chunks(self.n_classes) {
                let best = row.iter().enumerate().fold(0, |b, (i, v)| if *v > row[b] { i } else { b });
                out.push(best);
            }
        }
        Ok(out)
    }

    /// Trains on the listed samples with cross-entropy.
    pub fn fit(feats: &SensorFeatures, idx: &[usize], labels: &[usize], n_classes: usize, cfg: &HeadTrainConfig) -> Result<Self> {
        let mut head = ClassifierHead::new(feats.fmap_channels(), feats.z_dim(), n_classes, cfg.seed);
        let mut opt = adam(cfg);
        for epoch in 0..cfg.epochs {
            for batch in epoch_batches(idx.len(), cfg.batch_size, cfg.seed, epoch) {
                let rows: Vec<usize> = batch.iter().map(|&b| idx[b]).collect();
                let y: Vec<usize> = batch.iter().map(|&b| labels[b]).collect();
                let mut t = Tape::<f32>::new();
                let p = head.params.bind(&mut t, true);
                let f = t.constant(feats.fmap_batch(&rows));
                let z = t.constant(feats.z_batch(&rows));
                let logits = ClassifierHead::logits(&mut t, &p, f, z)?;
                let loss = cross_entropy(&mut t, logits, &y)?;
                t.backward(loss)?;
                opt.begin_step();
                head.params.apply_grads(&t, &p, &mut opt, "");
            }
        }
        Ok(head)
    }
}

fn nonempty(idx: &[usize], what: &str) -> Result<()> {
    if idx.is_empty() {
        return Err(Error::Contract(format!("no {what} samples")));
    }
    Ok(())
}

impl TrainedHead for FittedClassifier {
    fn score(&self, feats: &SensorFeatures, manifest: &DatasetManifest, split: Split) -> Result<f64> {
        let idx = manifest.contacts_in(split);
        nonempty(&idx, "evaluation")?;
        let pred = self.0.predict(feats, &idx)?;
        let hits = pred.iter().zip(&idx).filter(|(p, &i)| **p == manifest.contacts[i].class_label).count();
        Ok(hits as f64 / idx.len() as f64)
    }
}

impl DownstreamTask for Classification {
    fn name(&self) -> &'static str {
        "classification"
    }

    fn metric_kind(&self) -> MetricKind {
        MetricKind::Accuracy
    }

    fn check_labels(&self, manifest: &DatasetManifest) -> Result<()> {
        if manifest.classes.is_empty() {
            return Err(Error::Contract("dataset has no class labels".into()));
        }
        Ok(())
    }

    fn fit(&self, feats: &SensorFeatures, manifest: &DatasetManifest, cfg: &HeadTrainConfig) -> Result<Box<dyn TrainedHead>> {
        let idx = manifest.contacts_in(Split::Train);
        nonempty(&idx, "training")?;
        let labels: Vec<usize> = idx.iter().map(|&i| manifest.contacts[i].class_label).collect();
        let head = ClassifierHead::fit(feats, &idx, &labels, manifest.classes.len(), cfg)?;
        Ok(Box::new(FittedClassifier(head)))
    }
}

pub struct Pose;

/// Ordered press pairs `(first, second)` of the same object within `split`.
pub fn pose_pairs(manifest: &DatasetManifest, split: Split) -> Vec<(usize, usize)> {
    let idx = manifest.contacts_in(split);
    let mut out = Vec::new();
    for &a in &idx {
        for &b in &idx {
            if a != b && manifest.contacts[a].object_id == manifest.contacts[b].object_id {
                out.push((a, b));
            }
        }
    }
    out
}

fn displacement(manifest: &DatasetManifest, (a, b): (usize, usize)) -> [f32; 3] {
    let (pa, pb) = (manifest.contacts[a].pose_mm, manifest.contacts[b].pose_mm);
    [(pb[0] - pa[0]) as f32, (pb[1] - pa[1]) as f32, (pb[2] - pa[2]) as f32]
}

impl PoseHead {
    pub fn predict_pairs(&self, feats: &SensorFeatures, pairs: &[(usize, usize)]) -> Result<Vec<[f32; 3]>> {
        let mut out = Vec::with_capacity(pairs.len());
        for chunk in pairs.chunks(64) {
            let (a, b): (Vec<usize>, Vec<usize>) = chunk.iter().copied().unzip();
            let mut t = Tape::<f32>::new();
            let p = self.params.bind(&mut t, false);
            let fa = t.constant(feats.fmap_batch(&a));
            let fb = t.constant(feats.fmap_batch(&b));
            let y = PoseHead::predict(&mut t, &p, fa, fb)?;
            out.extend(t.data(y).chunks(3).map(|r| [r[0], r[1], r[2]]));
        }
        Ok(out)
    }

    /// Trains on `(pair, target)` examples with mean squared error.
    pub fn fit(feats: &SensorFeatures, pairs: &[(usize, usize)], targets: &[[f32; 3]], cfg: &HeadTrainConfig) -> Result<Self> {
        let mut head = PoseHead::new(feats.fmap_channels(), cfg.seed);
        let mut opt = adam(cfg);
        for epoch in 0..cfg.epochs {
            for batch in epoch_batches(pairs.len(), cfg.batch_size, cfg.seed, epoch) {
                let a: Vec<usize> = batch.iter().map(|&i| pairs[i].0).collect();
                let b: Vec<usize> = batch.iter().map(|&i| pairs[i].1).collect();
                let y: Vec<f32> = batch.iter().flat_map(|&i| targets[i]).collect();
                let mut t = Tape::<f32>::new();
                let p = head.params.bind(&mut t, true);
                let fa = t.constant(feats.fmap_batch(&a));
                let fb = t.constant(feats.fmap_batch(&b));
                let target = t.constant(Tensor::new(vec![batch.len(), 3], y)?);
                let pred = PoseHead::predict(&mut t, &p, fa, fb)?;
                let loss = mse(&mut t, pred, target)?;
                t.backward(loss)?;
                opt.begin_step();
                head.params.apply_grads(&t, &p, &mut opt, "");
            }
        }
        Ok(head)
    }
}

/// Root mean over samples of the per-sample mean squared error, in mm.
pub fn pose_rmse(pred: &[[f32; 3]], target: &[[f32; 3]]) -> f64 {
    let se: f64 = pred
        .iter()
        .zip(target)
        .map(|(p, t)| (0..3).map(|k| (p[k] as f64 - t[k] as f64).powi(2)).sum::<f64>() / 3.0)
        .sum();
    (se / pred.len().max(1) as f64).sqrt()
}

struct FittedPose(PoseHead);

impl TrainedHead for FittedPose {
    fn score(&self, feats: &SensorFeatures, manifest: &DatasetManifest, split: Split) -> Result<f64> {
        let pairs = pose_pairs(manifest, split);
        if pairs.is_empty() {
            return Err(Error::Contract("no evaluation pose pairs".into()));
        }
        let target: Vec<[f32; 3]> = pairs.iter().map(|&p| displacement(manifest, p)).collect();
        Ok(pose_rmse(&self.0.predict_pairs(feats, &pairs)?, &target))
    }
}

impl DownstreamTask for Pose {
    fn name(&self) -> &'static str {
        "pose"
    }

    fn metric_kind(&self) -> MetricKind {
        MetricKind::Rmse
    }

    fn check_labels(&self, manifest: &DatasetManifest) -> Result<()> {
        if pose_pairs(manifest, Split::Train).is_empty() {
            return Err(Error::Contract("dataset has no press pairs of a shared object for pose labels".into()));
        }
        Ok(())
    }

    fn fit(&self, feats: &SensorFeatures, manifest: &DatasetManifest, cfg: &HeadTrainConfig) -> Result<Box<dyn TrainedHead>> {
        let pairs = pose_pairs(manifest, Split::Train);
        if pairs.is_empty() {
            return Err(Error::Contract("no training pose pairs".into()));
        }
        let target: Vec<[f32; 3]> = pairs.iter().map(|&p| displacement(manifest, p)).collect();
        Ok(Box::new(FittedPose(PoseHead::fit(feats, &pairs, &target, cfg)?)))
    }
}

/// Downstream tasks by name.
pub struct TaskRegistry {
    tasks: Vec<Box<dyn DownstreamTask>>,
}

impl TaskRegistry {
    pub fn builtin() -> Self {
        TaskRegistry { tasks: vec![Box::new(Classification), Box::new(Pose)] }
    }

    pub fn global() -> &'static TaskRegistry {
        static REG: OnceLock<TaskRegistry> = OnceLock::new();
        REG.get_or_init(TaskRegistry::builtin)
    }

    pub fn register(&mut self, task: Box<dyn DownstreamTask>) {
        self.tasks.retain(|t| t.name() != task.name());
        self.tasks.push(task);
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.tasks.iter().map(|t| t.name()).collect()
    }

    pub fn get(&self, name: &str) -> Result<&dyn DownstreamTask> {
        self.tasks
            .iter()
            .find(|t| t.name() == name)
            .map(|t| t.as_ref())
            .ok_or_else(|| Error::config(format!("unknown task '{name}', expected one of {:?}", self.names())))
    }
}

/// Fits a head per sensor and scores it on every sensor's evaluation split.
pub fn transfer_matrix(
    task: &dyn DownstreamTask,
    features: &[SensorFeatures],
    manifest: &DatasetManifest,
    cfg: &HeadTrainConfig,
) -> Result<TransferMatrix> {
    task.check_labels(manifest)?;
    let rows = features
        .par_iter()
        .map(|train| {
            let cell_cfg = HeadTrainConfig { seed: crate::seed::derive_seed(cfg.seed, &format!("row/{}", train.sensor)), ..cfg.clone() };
            let head = task.fit(train, manifest, &cell_cfg)?;
            features.iter().map(|eval| head.score(eval, manifest, Split::Eval)).collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TransferMatrix {
        sensor_ids: features.iter().map(|f| manifest.sensors[f.sensor].sensor_id.clone()).collect(),
        a: rows,
        metric_kind: task.metric_kind(),
    })
}
