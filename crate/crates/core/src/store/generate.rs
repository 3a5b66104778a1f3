use std::collections::HashSet;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::image::{to_u8, write_image};
use super::manifest::{ContactEntry, DatasetManifest, SampleEntry, SensorEntry, Split, Stats, MANIFEST_VERSION};
use super::tnsr::write_f32;
use crate::error::IoContext;
use crate::optics::{
    make_calibration_set, normal_from_height, raw_imprint, render_background, render_imprint,
    sample_sensor_config, CalibMode, ContactScene, IndenterRegistry, SensorConfig,
};
use crate::seed::rng_for;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerateConfig {
    pub n_sensors: usize,
    pub n_contacts: usize,
    pub seed: u64,
    pub calib_mode: CalibMode,
    pub resolution: usize,
    /// Indenter primitives used as contact classes, in label order.
    pub classes: Vec<String>,
    /// First sensor index, so disjoint sensor sets can share a seed.
    pub sensor_offset: usize,
    pub presses_per_object: usize,
    pub train_fraction: f64,
}

impl GenerateConfig {
    pub fn new(n_sensors: usize, n_contacts: usize, seed: u64) -> Self {
        GenerateConfig {
            n_sensors,
            n_contacts,
            seed,
            calib_mode: CalibMode::K18,
            resolution: 64,
            classes: IndenterRegistry::global().names().iter().map(|s| s.to_string()).collect(),
            sensor_offset: 0,
            presses_per_object: 2,
            train_fraction: 0.8,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_sensors < 2 {
            return Err(Error::config("sensor-aligned views need at least 2 sensors"));
        }
        if self.n_contacts < 2 {
            return Err(Error::config("need at least 2 contacts"));
        }
        if self.resolution < 8 {
            return Err(Error::config(format!("resolution {} too small", self.resolution)));
        }
        if self.classes.is_empty() {
            return Err(Error::config("empty class list"));
        }
        let mut seen = HashSet::new();
        for c in &self.classes {
            IndenterRegistry::global().spec(c)?;
            if !seen.insert(c) {
                return Err(Error::config(format!("duplicate class {c}")));
            }
        }
        if self.presses_per_object == 0 || !(0.0..=1.0).contains(&self.train_fraction) {
            return Err(Error::config("presses_per_object ≥ 1 and train_fraction in [0, 1]"));
        }
        Ok(())
    }
}

/// Samples the contact set: objects cycle through classes, each pressed
/// `presses_per_object` times at random poses.
pub fn sample_contacts(cfg: &GenerateConfig) -> Result<Vec<ContactEntry>> {
    let registry = IndenterRegistry::global();
    let n_objects = cfg.n_contacts.div_ceil(cfg.presses_per_object);
    let mut order: Vec<usize> = (0..n_objects).collect();
    order.shuffle(&mut rng_for(cfg.seed, "split"));
    let n_train = (cfg.train_fraction * n_objects as f64).round() as usize;
    let mut split = vec![Split::Eval; n_objects];
    for &o in &order[..n_train] {
        split[o] = Split::Train;
    }
    let objects: Vec<(usize, Vec<f64>)> = (0..n_objects)
        .map(|o| {
            let class = o % cfg.classes.len();
            let params = registry.spec(&cfg.classes[class])?.sample_params(&mut rng_for(cfg.seed, &format!("object/{o}")));
            Ok((class, params))
        })
        .collect::<Result<_>>()?;
    (0..cfg.n_contacts)
        .map(|i| {
            let object_id = i / cfg.presses_per_object;
            let (class, params) = &objects[object_id];
            let mut rng = rng_for(cfg.seed, &format!("contact/{i}"));
            let t = [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)];
            let depth = rng.random_range(0.4..1.5);
            let contact_id = format!("contact_{i:05}");
            let primitive = &cfg.classes[*class];
            let mut scene = ContactScene::new(&contact_id, primitive, params, t, depth);
            scene.rotation_deg = [
                rng.random_range(-15.0..15.0),
                rng.random_range(-15.0..15.0),
                rng.random_range(0.0..360.0),
            ];
            scene.validate()?;
            Ok(ContactEntry {
                contact_id,
                primitive: primitive.clone(),
                params: params.clone(),
                class_label: *class,
                pose_mm: [t[0], t[1], depth],
                object_id,
                split: split[object_id],
                scene,
            })
        })
        .collect()
}

fn mkdir(p: &Path) -> Result<()> {
    fs::create_dir_all(p).at(p)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value).expect("serializable")).at(path)
}

/// Renders every contact under every sensor and writes the dataset tree
/// rooted at `out_dir`.
pub fn generate_dataset(cfg: &GenerateConfig, out_dir: &Path) -> Result<DatasetManifest> {
    cfg.validate()?;
    let res = cfg.resolution;
    let sensors: Vec<SensorConfig> = (0..cfg.n_sensors)
        .map(|i| SensorConfig { resolution: res, ..sample_sensor_config(cfg.seed, cfg.sensor_offset + i) })
        .collect();
    let contacts = sample_contacts(cfg)?;
    log::info!("generating {} sensors × {} contacts at {res}²", sensors.len(), contacts.len());

    mkdir(out_dir)?;
    let sensor_entries: Vec<SensorEntry> = sensors
        .par_iter()
        .map(|s| {
            let dir = out_dir.join("sensors").join(&s.sensor_id);
            mkdir(&dir)?;
            write_json(&dir.join("config.json"), s)?;
            let calib = make_calibration_set(s, cfg.calib_mode, cfg.seed)?;
            write_image(&dir.join("background.png"), &calib.background)?;
            let mut calibration_paths = Vec::new();
            for (img, d) in calib.images.iter().zip(&calib.descriptors) {
                let rel = format!("sensors/{}/calib_{:02}.png", s.sensor_id, d.index);
                write_image(&out_dir.join(&rel), img)?;
                calibration_paths.push(rel);
            }
            Ok(SensorEntry {
                sensor_id: s.sensor_id.clone(),
                config: s.clone(),
                calibration_paths,
                calibration: calib.descriptors,
                background_path: format!("sensors/{}/background.png", s.sensor_id),
            })
        })
        .collect::<Result<_>>()?;

    for c in &contacts {
        let dir = out_dir.join("contacts").join(&c.contact_id);
        mkdir(&dir)?;
        write_json(&dir.join("scene.json"), &c.scene)?;
    }
    let imprints = contacts
        .par_iter()
        .map(|c| raw_imprint(&c.scene, res))
        .collect::<Result<Vec<_>>>()?;
    let normals: Vec<Vec<f32>> = imprints.par_iter().map(|h| normal_from_height(h).to_f32()).collect();
    let backgrounds: Vec<Vec<u8>> =
        sensors.iter().map(|s| render_background(s).values.iter().map(|&v| to_u8(v)).collect()).collect();

    for s in &sensors {
        mkdir(&out_dir.join("samples").join(&s.sensor_id))?;
    }
    let any_train = contacts.iter().any(|c| c.split == Split::Train);
    let jobs: Vec<(usize, usize)> = (0..sensors.len()).flat_map(|s| (0..contacts.len()).map(move |c| (s, c))).collect();
    let rendered = jobs
        .par_iter()
        .map(|&(si, ci)| {
            let (s, c) = (&sensors[si], &contacts[ci]);
            let img = render_imprint(&imprints[ci], s)?;
            let image_path = format!("samples/{}/{}.png", s.sensor_id, c.contact_id);
            let normal_path = format!("samples/{}/{}.tnsr", s.sensor_id, c.contact_id);
            write_image(&out_dir.join(&image_path), &img)?;
            write_f32(&out_dir.join(&normal_path), &[res, res, 3], &normals[ci])?;
            let mut moments = [0.0f64; 6];
            if c.split == Split::Train || !any_train {
                for (px, (&v, &b)) in img.values.iter().zip(&backgrounds[si]).enumerate() {
                    let x = (to_u8(v) as f64 - b as f64) / 255.0;
                    moments[px % 3] += x;
                    moments[3 + px % 3] += x * x;
                }
            }
            let entry = SampleEntry {
                sensor_id: s.sensor_id.clone(),
                contact_id: c.contact_id.clone(),
                image_path,
                normal_path,
            };
            Ok((entry, moments))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut moments = [0.0f64; 6];
    let mut samples = Vec::with_capacity(rendered.len());
    let mut counted = 0usize;
    for (&(_, ci), (entry, m)) in jobs.iter().zip(rendered) {
        if contacts[ci].split == Split::Train || !any_train {
            counted += 1;
        }
        for (a, b) in moments.iter_mut().zip(m) {
            *a += b;
        }
        samples.push(entry);
    }
    let n = (counted * res * res) as f64;
    let mut stats = Stats::IDENTITY;
    for ch in 0..3 {
        let mean = moments[ch] / n;
        let var = (moments[3 + ch] / n - mean * mean).max(0.0);
        stats.mean[ch] = mean;
        stats.std[ch] = if var > 1e-12 { var.sqrt() } else { 1.0 };
    }

    let manifest = DatasetManifest {
        version: MANIFEST_VERSION,
        global_seed: cfg.seed,
        resolution: res,
        calib_mode: cfg.calib_mode,
        classes: cfg.classes.clone(),
        sensor_aligned: true,
        sensors: sensor_entries,
        contacts,
        samples,
        stats,
    };
    manifest.save(out_dir)?;
    Ok(manifest)
}
