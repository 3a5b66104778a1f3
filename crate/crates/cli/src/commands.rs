use std::path::{Path, PathBuf};

use serde::Serialize;
use sitr_core::encoder::{Encoder, EncoderConfig};
use sitr_core::eval::{
    ablation_sweep, evaluate_transfer, export_embeddings, load_eval_dataset, reconstruct_height, AblationRegistry,
    AblationRow, ExperimentConfig, HeadTrainConfig, MetricKind, TrainingMeta, TransferMatrix, TransferSummary,
};
use sitr_core::objectives::LossWeights;
use sitr_core::optics::{
    normal_from_height, raw_imprint, render_background, render_imprint, CalibMode, ContactScene, HeightMap,
    IndenterRegistry, NormalMap, SensorConfig,
};
use sitr_core::store::image::{write_gray, write_image, write_signal};
use sitr_core::store::{generate_dataset, read_f32, write_f32, DatasetManifest, GenerateConfig, InMemoryDataset, LoadOptions};
use sitr_core::train::{self, PretrainConfig, StepLoss};
use sitr_core::{Error, Result};

use crate::args::{AblateArgs, Cli, EvalArgs, GenArgs, ModelArgs, PretrainArgs, ReconstructArgs, RenderArgs};
use crate::write_run_config;

pub fn gen(cli: &Cli, a: &GenArgs) -> Result<DatasetManifest> {
    write_run_config(cli, "gen", Some(a.seed), &a.out, a)?;
    let mut cfg = GenerateConfig::new(a.sensors, a.contacts, a.seed);
    cfg.calib_mode = CalibMode::parse(&a.calib)?;
    cfg.resolution = a.resolution;
    cfg.sensor_offset = a.sensor_offset;
    if let Some(c) = &a.classes {
        cfg.classes = c.clone();
    }
    let m = generate_dataset(&cfg, &a.out)?;
    println!(
        "{}: {} sensors x {} contacts = {} samples, {}² px, calibration {}, classes [{}], stats mean {:?} std {:?}",
        a.out.display(),
        m.sensors.len(),
        m.contacts.len(),
        m.samples.len(),
        m.resolution,
        m.calib_mode.label(),
        m.classes.join(", "),
        m.stats.mean,
        m.stats.std
    );
    Ok(m)
}

fn pretrain_config(m: &ModelArgs, manifest: &DatasetManifest) -> Result<(PretrainConfig, CalibMode)> {
    let calib = match &m.calib {
        Some(s) => CalibMode::parse(s)?,
        None => manifest.calib_mode,
    };
    let encoder = EncoderConfig {
        image_size: m.image_size.unwrap_or(manifest.resolution),
        patch_size: m.patch,
        embed_dim: m.dim,
        depth: m.depth,
        num_heads: m.heads,
        ..EncoderConfig::desk(calib.count())
    };
    encoder.validate()?;
    let mut cfg = PretrainConfig::new(encoder);
    cfg.weights = LossWeights { lambda_normal: m.lambda_normal, lambda_scl: m.lambda_scl, tau: m.tau };
    cfg.weights.validate()?;
    cfg.epochs = m.epochs;
    cfg.batch_contacts = m.batch_contacts;
    cfg.lr = m.lr;
    cfg.seed = m.seed;
    cfg.augment = !m.no_augment;
    cfg.max_steps = m.max_steps;
    Ok((cfg, calib))
}

pub fn pretrain(cli: &Cli, a: &PretrainArgs) -> Result<(Encoder, Vec<StepLoss>)> {
    write_run_config(cli, "pretrain", Some(a.model.seed), &a.out, a)?;
    let manifest = DatasetManifest::load(&a.data)?;
    let (cfg, calib_mode) = pretrain_config(&a.model, &manifest)?;
    let data = InMemoryDataset::load(
        &a.data,
        &LoadOptions { image_size: cfg.encoder.image_size, calib_mode, stats: None },
    )?;
    let (enc, hist) = train::pretrain(&data, &cfg, Some(&a.out.join("loss.csv")))?;
    enc.save(&a.out)?;
    TrainingMeta { stats: data.stats, calib_mode, pretrain: cfg }.save(&a.out)?;
    if let (Some(first), Some(last)) = (hist.first(), hist.last()) {
        println!("{} steps, total loss {:.5} -> {:.5}", hist.len(), first.total, last.total);
    }
    Ok((enc, hist))
}

/// Contents of `summary.json`.
#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub task: String,
    pub units: &'static str,
    #[serde(flatten)]
    pub summary: TransferSummary,
    pub sensor_ids: Vec<String>,
}

fn write_json<T: Serialize>(path: &Path, v: &T) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(v).expect("serializable")).map_err(|e| Error::io(path, e))
}

pub fn eval_transfer(cli: &Cli, a: &EvalArgs) -> Result<(TransferMatrix, Summary)> {
    write_run_config(cli, "eval-transfer", Some(a.seed), &a.out, a)?;
    let enc = Encoder::load(&a.ckpt)?;
    let meta = TrainingMeta::load(&a.ckpt)?;
    let data = load_eval_dataset(&a.data, &meta)?;
    let head = HeadTrainConfig { epochs: a.epochs, batch_size: a.head.head_batch, lr: a.head.head_lr, seed: a.seed };
    let (m, s, feats) = evaluate_transfer(&enc, &data, &a.task, &head)?;
    // matrix before summary: a summary never exists without its matrix
    m.write_csv(&a.out.join("transfer_matrix.csv"))?;
    let summary = Summary {
        task: a.task.clone(),
        units: match s.metric_kind {
            MetricKind::Accuracy => "fraction",
            MetricKind::Rmse => "mm",
        },
        summary: s,
        sensor_ids: m.sensor_ids.clone(),
    };
    write_json(&a.out.join("summary.json"), &summary)?;
    export_embeddings(&data, &feats, &a.out.join("embeddings.csv"))?;
    println!(
        "{}: transfer {:.4} (std {:.4}), no-transfer {:.4} (std {:.4}) [{}]",
        a.task, s.transfer, s.transfer_std, s.no_transfer, s.no_transfer_std, summary.units
    );
    Ok((m, summary))
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn parent_dir(p: &Path) -> &Path {
    match p.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    }
}

pub fn render(cli: &Cli, a: &RenderArgs) -> Result<()> {
    write_run_config(cli, "render", None, parent_dir(&a.out), a)?;
    let text = std::fs::read_to_string(&a.sensor_config).map_err(|e| Error::io(&a.sensor_config, e))?;
    let cfg = SensorConfig::from_json(&text)?;
    let (name, params) = IndenterRegistry::global().parse(&a.object)?;
    if !(a.depth >= 0.0) {
        return Err(Error::config(format!("press depth must be non-negative, got {}", a.depth)));
    }
    let raw = if a.depth == 0.0 {
        HeightMap::zeros(cfg.resolution)
    } else {
        let mut scene = ContactScene::new("render", &name, &params, a.pos, a.depth);
        scene.rotation_deg = a.rot;
        scene.validate()?;
        raw_imprint(&scene, cfg.resolution)?
    };
    let image = render_imprint(&raw, &cfg)?;
    let r = cfg.resolution;
    write_image(&with_suffix(&a.out, "_image.png"), &image)?;
    write_f32(&with_suffix(&a.out, "_normal.tnsr"), &[r, r, 3], &normal_from_height(&raw).to_f32())?;
    write_signal(&with_suffix(&a.out, "_signal.png"), &image.subtract(&render_background(&cfg))?)?;
    Ok(())
}

pub fn reconstruct(cli: &Cli, a: &ReconstructArgs) -> Result<()> {
    write_run_config(cli, "reconstruct", None, parent_dir(&a.out), a)?;
    if !(a.pitch_mm > 0.0 && a.pitch_mm.is_finite()) {
        return Err(Error::config(format!("pixel pitch must be positive, got {}", a.pitch_mm)));
    }
    let (dims, data) = read_f32(&a.normal)?;
    if dims.len() != 3 || dims[2] != 3 || dims[0] != dims[1] || dims[0] == 0 {
        return Err(Error::Format {
            kind: "normal map",
            path: a.normal.clone(),
            detail: format!("dims {dims:?}, expected [R, R, 3]"),
        });
    }
    let normals = NormalMap { resolution: dims[0], values: data.iter().map(|v| *v as f64).collect() };
    let h = reconstruct_height(&normals, a.pitch_mm)?;
    let r = h.resolution;
    write_f32(&a.out, &[r, r], &h.values.iter().map(|v| *v as f32).collect::<Vec<_>>())?;
    let (lo, hi) = h.values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, u), v| (l.min(*v), u.max(*v)));
    let span = if hi - lo > 1e-12 { hi - lo } else { 1.0 };
    let gray: Vec<u8> = h.values.iter().map(|v| ((v - lo) / span * 255.0).round() as u8).collect();
    write_gray(&a.out.with_extension("png"), r, r, &gray)?;
    println!("height range {:.4} mm over {r}x{r}", hi - lo);
    Ok(())
}

pub fn ablate(cli: &Cli, a: &AblateArgs) -> Result<Vec<AblationRow>> {
    write_run_config(cli, "ablate", Some(a.model.seed), &a.out, a)?;
    let axis = AblationRegistry::global().get(&a.axis)?;
    let manifest = DatasetManifest::load(&a.data)?;
    let (pretrain, calib_mode) = pretrain_config(&a.model, &manifest)?;
    let base = ExperimentConfig {
        pretrain,
        calib_mode,
        head: HeadTrainConfig { epochs: a.head_epochs, batch_size: a.head.head_batch, lr: a.head.head_lr, seed: a.model.seed },
        task: a.task.clone(),
    };
    let eval = a.eval_data.as_deref().unwrap_or(&a.data);
    let rows = ablation_sweep(axis, &base, &a.data, eval, &a.out)?;
    for r in &rows {
        println!("{}={}: transfer {:.4} no-transfer {:.4}", r.axis, r.cell, r.summary.transfer, r.summary.no_transfer);
    }
    Ok(rows)
}
