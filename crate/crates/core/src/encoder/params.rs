use std::collections::BTreeMap;
use std::path::Path;

use numgrad::Tensor;
use rand_distr::{Distribution, Normal};
use sha2::{Digest, Sha256};

use super::config::EncoderConfig;
use crate::error::IoContext;
use crate::seed::rng_for;
use crate::store::{read_f32, write_f32};
use crate::{Error, Result};

const INIT_STD: f64 = 0.02;
const CONFIG_FILE: &str = "config.json";

#[derive(Clone, Copy, Debug, PartialEq)]
enum Init {
    TruncNormal,
    Normal,
    Zeros,
    Ones,
}

/// Every parameter of the encoder with its shape and initializer.
fn layout(cfg: &EncoderConfig) -> Vec<(String, Vec<usize>, Init)> {
    let d = cfg.embed_dim;
    let hidden = cfg.mlp_ratio * d;
    let p2c = cfg.patch_dim();
    let mut out = vec![
        ("tactile_proj.w".to_string(), vec![p2c, d], Init::TruncNormal),
        ("tactile_proj.b".to_string(), vec![d], Init::Zeros),
    ];
    if cfg.k > 0 {
        out.push(("calib_proj.w".into(), vec![cfg.k * p2c, d], Init::TruncNormal));
        out.push(("calib_proj.b".into(), vec![d], Init::Zeros));
    }
    out.push(("cls".into(), vec![d], Init::Normal));
    out.push(("stream_type".into(), vec![2, d], Init::TruncNormal));
    for i in 0..cfg.depth {
        let mut p = |name: &str, dims: Vec<usize>, init| out.push((format!("blocks.{i}.{name}"), dims, init));
        p("ln1.g", vec![d], Init::Ones);
        p("ln1.b", vec![d], Init::Zeros);
        p("attn.qkv.w", vec![d, 3 * d], Init::TruncNormal);
        p("attn.qkv.b", vec![3 * d], Init::Zeros);
        p("attn.proj.w", vec![d, d], Init::TruncNormal);
        p("attn.proj.b", vec![d], Init::Zeros);
        p("ln2.g", vec![d], Init::Ones);
        p("ln2.b", vec![d], Init::Zeros);
        p("mlp.fc1.w", vec![d, hidden], Init::TruncNormal);
        p("mlp.fc1.b", vec![hidden], Init::Zeros);
        p("mlp.fc2.w", vec![hidden, d], Init::TruncNormal);
        p("mlp.fc2.b", vec![d], Init::Zeros);
    }
    out.push(("ln_f.g".into(), vec![d], Init::Ones));
    out.push(("ln_f.b".into(), vec![d], Init::Zeros));
    out.push(("normal_head.w".into(), vec![d, p2c], Init::TruncNormal));
    out.push(("normal_head.b".into(), vec![p2c], Init::Zeros));
    out.push(("embed_head.w".into(), vec![d, cfg.embed_out], Init::TruncNormal));
    out.push(("embed_head.b".into(), vec![cfg.embed_out], Init::Zeros));
    out
}

/// Named parameter tensors of one encoder.
#[derive(Clone, Debug, PartialEq)]
pub struct Params {
    pub tensors: BTreeMap<String, Tensor<f32>>,
}

impl Params {
    pub fn init(cfg: &EncoderConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let normal = Normal::new(0.0, INIT_STD).expect("positive std");
        let tensors = layout(cfg)
            .into_iter()
            .map(|(name, dims, init)| {
                let mut rng = rng_for(seed, &format!("init/{name}"));
                let n: usize = dims.iter().product();
                let data: Vec<f32> = match init {
                    Init::Zeros => vec![0.0; n],
                    Init::Ones => vec![1.0; n],
                    Init::Normal => (0..n).map(|_| normal.sample(&mut rng) as f32).collect(),
                    Init::TruncNormal => (0..n)
                        .map(|_| loop {
                            let v: f64 = normal.sample(&mut rng);
                            if v.abs() <= 2.0 * INIT_STD {
                                break v as f32;
                            }
                        })
                        .collect(),
                };
                (name, Tensor::new(dims, data).expect("sized from layout"))
            })
            .collect();
        Ok(Params { tensors })
    }

    pub fn get(&self, name: &str) -> Result<&Tensor<f32>> {
        self.tensors.get(name).ok_or_else(|| Error::Contract(format!("missing parameter {name}")))
    }

    pub fn count(&self) -> usize {
        self.tensors.values().map(Tensor::len).sum()
    }

    /// SHA-256 over names, dims and raw values, in name order.
    pub fn checksum(&self) -> String {
        let mut h = Sha256::new();
        for (name, t) in &self.tensors {
            h.update(name.as_bytes());
            for &d in t.dims() {
                h.update((d as u64).to_le_bytes());
            }
            for v in t.data() {
                h.update(v.to_le_bytes());
            }
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Writes `config.json` plus one TNSR per parameter into `dir`.
pub fn save_checkpoint(dir: &Path, cfg: &EncoderConfig, params: &Params) -> Result<()> {
    std::fs::create_dir_all(dir).at(dir)?;
    let cfg_path = dir.join(CONFIG_FILE);
    std::fs::write(&cfg_path, serde_json::to_string_pretty(cfg).expect("serializable")).at(&cfg_path)?;
    for (name, t) in &params.tensors {
        write_f32(&dir.join(format!("{name}.tnsr")), t.dims(), t.data())?;
    }
    Ok(())
}

pub fn load_checkpoint(dir: &Path) -> Result<(EncoderConfig, Params)> {
    let cfg_path = dir.join(CONFIG_FILE);
    let text = std::fs::read_to_string(&cfg_path).at(&cfg_path)?;
    let cfg: EncoderConfig = serde_json::from_str(&text).map_err(|e| Error::Format {
        kind: "encoder config",
        path: cfg_path,
        detail: e.to_string(),
    })?;
    cfg.validate()?;
    let mut tensors = BTreeMap::new();
    for (name, dims, _) in layout(&cfg) {
        let path = dir.join(format!("{name}.tnsr"));
        let (got, data) = read_f32(&path)?;
        if got != dims {
            return Err(Error::Format { kind: "TNSR", path, detail: format!("dims {got:?}, expected {dims:?}") });
        }
        tensors.insert(name, Tensor::new(dims, data)?);
    }
    Ok((cfg, Params { tensors }))
}

/// SHA-256 over `config.json` and the parameter tensors, in name order.
/// Logs and run metadata stored alongside are not covered.
pub fn checkpoint_digest(dir: &Path) -> Result<String> {
    let mut names: Vec<_> = std::fs::read_dir(dir)
        .at(dir)?
        .map(|e| e.map(|e| e.file_name()).at(dir))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .filter(|n| n == CONFIG_FILE || n.to_string_lossy().ends_with(".tnsr"))
        .collect();
    names.sort();
    let mut h = Sha256::new();
    for n in names {
        let p = dir.join(&n);
        h.update(n.to_string_lossy().as_bytes());
        h.update(std::fs::read(&p).at(&p)?);
    }
    Ok(h.finalize().iter().map(|b| format!("{b:02x}")).collect())
}
