use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::features::{extract_features, SensorFeatures};
use super::heads::HeadTrainConfig;
use super::tasks::{transfer_matrix, TaskRegistry};
use super::transfer::{transfer_performance, TransferMatrix, TransferSummary};
use crate::encoder::Encoder;
use crate::error::IoContext;
use crate::objectives::LossWeights;
use crate::optics::CalibMode;
use crate::store::{InMemoryDataset, LoadOptions, Stats};
use crate::train::{pretrain, PretrainConfig, StepLoss};
use crate::{Error, Result};

/// Normalization and calibration settings a checkpoint was trained with.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub stats: Stats,
    pub calib_mode: CalibMode,
    pub pretrain: PretrainConfig,
}

const META_FILE: &str = "training.json";

impl TrainingMeta {
    pub fn save(&self, ckpt: &Path) -> Result<()> {
        let p = ckpt.join(META_FILE);
        std::fs::write(&p, serde_json::to_string_pretty(self).expect("serializable")).at(&p)
    }

    pub fn load(ckpt: &Path) -> Result<Self> {
        let p = ckpt.join(META_FILE);
        let text = std::fs::read_to_string(&p).at(&p)?;
        serde_json::from_str(&text).map_err(|e| Error::Format { kind: "training metadata", path: p, detail: e.to_string() })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub pretrain: PretrainConfig,
    pub calib_mode: CalibMode,
    pub head: HeadTrainConfig,
    pub task: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub matrix: TransferMatrix,
    pub summary: TransferSummary,
    pub final_loss: Option<StepLoss>,
}

/// Loads an evaluation dataset normalized with the training statistics.
pub fn load_eval_dataset(root: &Path, meta: &TrainingMeta) -> Result<InMemoryDataset> {
    InMemoryDataset::load(
        root,
        &LoadOptions {
            image_size: meta.pretrain.encoder.image_size,
            calib_mode: meta.calib_mode,
            stats: Some(meta.stats),
        },
    )
}

/// Frozen features for every sensor of `data`.
pub fn all_features(enc: &Encoder, data: &InMemoryDataset) -> Result<Vec<SensorFeatures>> {
    (0..data.n_sensors()).map(|s| extract_features(enc, data, s)).collect()
}

/// Frozen-encoder transfer evaluation of one task on `data`.
pub fn evaluate_transfer(
    enc: &Encoder,
    data: &InMemoryDataset,
    task: &str,
    head: &HeadTrainConfig,
) -> Result<(TransferMatrix, TransferSummary, Vec<SensorFeatures>)> {
    let task = TaskRegistry::global().get(task)?;
    task.check_labels(&data.manifest)?;
    let feats = all_features(enc, data)?;
    let m = transfer_matrix(task, &feats, &data.manifest, head)?;
    let s = transfer_performance(&m)?;
    Ok((m, s, feats))
}

/// Pre-trains on `train_root`, then runs transfer evaluation on `eval_root`.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    train_root: &Path,
    eval_root: &Path,
    ckpt_out: Option<&Path>,
) -> Result<(Encoder, ExperimentResult)> {
    if cfg.pretrain.encoder.k != cfg.calib_mode.count() {
        return Err(Error::config(format!(
            "encoder K={} does not match calibration mode {}",
            cfg.pretrain.encoder.k,
            cfg.calib_mode.label()
        )));
    }
    let train = InMemoryDataset::load(
        train_root,
        &LoadOptions { image_size: cfg.pretrain.encoder.image_size, calib_mode: cfg.calib_mode, stats: None },
    )?;
    let loss_log = ckpt_out.map(|d| d.join("loss.csv"));
    if let Some(d) = ckpt_out {
        std::fs::create_dir_all(d).at(d)?;
    }
    let (enc, history) = pretrain(&train, &cfg.pretrain, loss_log.as_deref())?;
    let meta = TrainingMeta { stats: train.stats, calib_mode: cfg.calib_mode, pretrain: cfg.pretrain.clone() };
    drop(train);
    if let Some(d) = ckpt_out {
        enc.save(d)?;
        meta.save(d)?;
    }
    let eval = load_eval_dataset(eval_root, &meta)?;
    let (matrix, summary, _) = evaluate_transfer(&enc, &eval, &cfg.task, &cfg.head)?;
    Ok((enc, ExperimentResult { matrix, summary, final_loss: history.last().copied() }))
}

/// One axis of an ablation study: named cells, each a variant of a base
/// experiment.
pub trait AblationAxis: Send + Sync {
    fn name(&self) -> &'static str;
    fn cells(&self) -> Vec<&'static str>;
    fn apply(&self, cell: &str, base: &ExperimentConfig) -> Result<ExperimentConfig>;
}

pub struct CalibAxis;

impl AblationAxis for CalibAxis {
    fn name(&self) -> &'static str {
        "calib"
    }

    fn cells(&self) -> Vec<&'static str> {
        vec!["k0", "k4", "k9", "k8", "k18"]
    }

    fn apply(&self, cell: &str, base: &ExperimentConfig) -> Result<ExperimentConfig> {
        let mode = CalibMode::parse(cell)?;
        let mut cfg = base.clone();
        cfg.calib_mode = mode;
        cfg.pretrain.encoder.k = mode.count();
        Ok(cfg)
    }
}

pub struct TauAxis;

impl AblationAxis for TauAxis {
    fn name(&self) -> &'static str {
        "tau"
    }

    fn cells(&self) -> Vec<&'static str> {
        vec!["0.25", "0.10", "0.07", "0.03", "0.01"]
    }

    fn apply(&self, cell: &str, base: &ExperimentConfig) -> Result<ExperimentConfig> {
        let tau: f64 = cell.parse().map_err(|_| Error::config(format!("bad temperature '{cell}'")))?;
        let mut cfg = base.clone();
        cfg.pretrain.weights.tau = tau;
        Ok(cfg)
    }
}

pub struct LossAxis;

impl AblationAxis for LossAxis {
    fn name(&self) -> &'static str {
        "loss"
    }

    fn cells(&self) -> Vec<&'static str> {
        vec!["normal_only", "scl_only", "both"]
    }

    fn apply(&self, cell: &str, base: &ExperimentConfig) -> Result<ExperimentConfig> {
        let w = base.pretrain.weights;
        let weights = match cell {
            "normal_only" => LossWeights { lambda_scl: 0.0, lambda_normal: 1.0, ..w },
            "scl_only" => LossWeights { lambda_normal: 0.0, lambda_scl: 1.0, ..w },
            "both" => LossWeights { lambda_normal: 1.0, lambda_scl: 1.0, ..w },
            _ => return Err(Error::config(format!("unknown loss cell '{cell}'"))),
        };
        let mut cfg = base.clone();
        cfg.pretrain.weights = weights;
        Ok(cfg)
    }
}

/// Ablation axes by name.
pub struct AblationRegistry {
    axes: Vec<Box<dyn AblationAxis>>,
}

impl AblationRegistry {
    pub fn builtin() -> Self {
        AblationRegistry { axes: vec![Box::new(CalibAxis), Box::new(TauAxis), Box::new(LossAxis)] }
    }

    pub fn global() -> &'static AblationRegistry {
        static REG: OnceLock<AblationRegistry> = OnceLock::new();
        REG.get_or_init(AblationRegistry::builtin)
    }

    pub fn register(&mut self, axis: Box<dyn AblationAxis>) {
        self.axes.retain(|a| a.name() != axis.name());
        self.axes.push(axis);
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.axes.iter().map(|a| a.name()).collect()
    }

    pub fn get(&self, name: &str) -> Result<&dyn AblationAxis> {
        self.axes
            .iter()
            .find(|a| a.name() == name)
            .map(|a| a.as_ref())
            .ok_or_else(|| Error::config(format!("unknown ablation axis '{name}', expected one of {:?}", self.names())))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub axis: String,
    pub cell: String,
    pub summary: TransferSummary,
    pub final_loss: Option<StepLoss>,
}

pub fn ablation_csv(rows: &[AblationRow]) -> String {
    let mut s = String::from("axis,cell,transfer,no_transfer,transfer_std,no_transfer_std,final_l_normal,final_l_scl\n");
    for r in rows {
        let (ln, ls) = r.final_loss.map_or((f64::NAN, f64::NAN), |l| (l.l_normal, l.l_scl));
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.axis, r.cell, r.summary.transfer, r.summary.no_transfer, r.summary.transfer_std, r.summary.no_transfer_std, ln, ls
        ));
    }
    s
}

/// Runs every cell of `axis`, writing per-cell matrices under `out_dir/<cell>/`
/// and the combined table to `out_dir/ablation.csv`.
pub fn ablation_sweep(
    axis: &dyn AblationAxis,
    base: &ExperimentConfig,
    train_root: &Path,
    eval_root: &Path,
    out_dir: &Path,
) -> Result<Vec<AblationRow>> {
    std::fs::create_dir_all(out_dir).at(out_dir)?;
    let mut rows = Vec::new();
    for cell in axis.cells() {
        log::info!("ablation {}: cell {cell}", axis.name());
        let cfg = axis.apply(cell, base)?;
        let dir = out_dir.join(cell);
        let (_, result) = run_experiment(&cfg, train_root, eval_root, Some(&dir))?;
        result.matrix.write_csv(&dir.join("transfer_matrix.csv"))?;
        rows.push(AblationRow {
            axis: axis.name().to_string(),
            cell: cell.to_string(),
            summary: result.summary,
            final_loss: result.final_loss,
        });
        let p = out_dir.join("ablation.csv");
        std::fs::write(&p, ablation_csv(&rows)).at(&p)?;
    }
    Ok(rows)
}
