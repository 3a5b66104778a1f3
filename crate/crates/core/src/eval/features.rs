use std::io::Write;
use std::path::Path;

use numgrad::Tensor;

use crate::encoder::{unpatchify_tensor, Encoder};
use crate::error::IoContext;
use crate::store::InMemoryDataset;
use crate::{Error, Result};

const CHUNK: usize = 32;

/// Frozen representation of every contact seen by one sensor.
#[derive(Clone, Debug, PartialEq)]
pub struct SensorFeatures {
    pub sensor: usize,
    /// `[H, W, D/P²]` per feature map.
    pub fmap_dims: [usize; 3],
    pub fmaps: Vec<Vec<f32>>,
    pub z: Vec<Vec<f32>>,
    pub embed: Vec<Vec<f32>>,
}

impl SensorFeatures {
    pub fn fmap_channels(&self) -> usize {
        self.fmap_dims[2]
    }

    pub fn z_dim(&self) -> usize {
        self.z.first().map_or(0, Vec::len)
    }

    /// `[B, H, W, c]` tensor of the selected feature maps.
    pub fn fmap_batch(&self, idx: &[usize]) -> Tensor<f32> {
        let [h, w, c] = self.fmap_dims;
        let data = idx.iter().flat_map(|&i| self.fmaps[i].iter().copied()).collect();
        Tensor::new(vec![idx.len(), h, w, c], data).expect("uniform maps")
    }

    pub fn z_batch(&self, idx: &[usize]) -> Tensor<f32> {
        let data = idx.iter().flat_map(|&i| self.z[i].iter().copied()).collect();
        Tensor::new(vec![idx.len(), self.z_dim()], data).expect("uniform tokens")
    }
}

/// Runs the frozen encoder over all contacts of `sensor`.
pub fn extract_features(enc: &Encoder, data: &InMemoryDataset, sensor: usize) -> Result<SensorFeatures> {
    let cfg = &enc.config;
    if cfg.k != data.k() || cfg.image_size != data.image_size {
        return Err(Error::config(format!(
            "encoder expects K={} at {}², dataset provides K={} at {}²",
            cfg.k,
            cfg.image_size,
            data.k(),
            data.image_size
        )));
    }
    let h = data.image_size;
    let p2 = cfg.patch_size * cfg.patch_size;
    if cfg.embed_dim % p2 != 0 {
        return Err(Error::config(format!("embed dim {} is not a multiple of patch area {p2}", cfg.embed_dim)));
    }
    let c = cfg.embed_dim / p2;
    let n = data.n_contacts();
    let mut out = SensorFeatures {
        sensor,
        fmap_dims: [h, h, c],
        fmaps: Vec::with_capacity(n),
        z: Vec::with_capacity(n),
        embed: Vec::with_capacity(n),
    };
    let calib_row = &data.calib[sensor];
    for start in (0..n).step_by(CHUNK) {
        let idx: Vec<usize> = (start..(start + CHUNK).min(n)).collect();
        let b = idx.len();
        let images = Tensor::new(
            vec![b, h, h, 3],
            idx.iter().flat_map(|&i| data.signals[sensor][i].iter().copied()).collect(),
        )?;
        let calib = (cfg.k > 0)
            .then(|| Tensor::new(vec![b, h, h, 3 * cfg.k], calib_row.repeat(b)))
            .transpose()?;
        let r = enc.represent(&images, calib.as_ref(), CHUNK)?;
        let maps = unpatchify_tensor(&r.tokens, cfg.patch_size)?;
        let d = cfg.embed_dim;
        for j in 0..b {
            out.fmaps.push(maps.data()[j * h * h * c..(j + 1) * h * h * c].to_vec());
            out.z.push(r.z.data()[j * d..(j + 1) * d].to_vec());
            out.embed.push(r.embed.data()[j * cfg.embed_out..(j + 1) * cfg.embed_out].to_vec());
        }
    }
    Ok(out)
}

/// One CSV row per sample: sensor, contact, class and embedding values.
pub fn export_embeddings(data: &InMemoryDataset, features: &[SensorFeatures], out_csv: &Path) -> Result<usize> {
    let f = std::fs::File::create(out_csv).at(out_csv)?;
    let mut w = std::io::BufWriter::new(f);
    let dim = features.first().and_then(|f| f.embed.first()).map_or(0, Vec::len);
    let mut header = String::from("sensor_id,contact_id,class_label");
    for i in 0..dim {
        header.push_str(&format!(",e{i}"));
    }
    writeln!(w, "{header}").at(out_csv)?;
    let mut rows = 0;
    for feats in features {
        let sensor = &data.manifest.sensors[feats.sensor].sensor_id;
        for (c, e) in data.manifest.contacts.iter().zip(&feats.embed) {
            let mut line = format!("{sensor},{},{}", c.contact_id, c.class_label);
            for v in e {
                line.push_str(&format!(",{v}"));
            }
            writeln!(w, "{line}").at(out_csv)?;
            rows += 1;
        }
    }
    w.flush().at(out_csv)?;
    Ok(rows)
}

/// Mean cross-sensor cosine for the same class and for different classes.
pub fn embedding_separation(data: &InMemoryDataset, features: &[SensorFeatures]) -> (f64, f64) {
    let labels: Vec<usize> = data.manifest.contacts.iter().map(|c| c.class_label).collect();
    let dot = |a: &[f32], b: &[f32]| a.iter().zip(b).map(|(x, y)| *x as f64 * *y as f64).sum::<f64>();
    let (mut same, mut ns, mut diff, mut nd) = (0.0, 0usize, 0.0, 0usize);
    for (a, fa) in features.iter().enumerate() {
        for fb in &features[a + 1..] {
            for i in 0..labels.len() {
                for j in 0..labels.len() {
                    let c = dot(&fa.embed[i], &fb.embed[j]);
                    if labels[i] == labels[j] {
                        same += c;
                        ns += 1;
                    } else {
                        diff += c;
                        nd += 1;
                    }
                }
            }
        }
    }
    (same / ns.max(1) as f64, diff / nd.max(1) as f64)
}
