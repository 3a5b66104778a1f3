use std::path::{Path, PathBuf};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::augment::augment;
use super::image::read_image;
use super::manifest::{DatasetManifest, Stats};
use super::preprocess::{preprocess, stack_calibration};
use super::tnsr::read_f32;
use crate::filters::resize_bilinear;
use crate::optics::CalibMode;
use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct LoadOptions {
    pub image_size: usize,
    pub calib_mode: CalibMode,
    /// Normalization statistics; defaults to the dataset's own.
    pub stats: Option<Stats>,
}

/// A dataset decoded and normalized into memory.
#[derive(Clone, Debug)]
pub struct InMemoryDataset {
    pub root: PathBuf,
    pub manifest: DatasetManifest,
    pub image_size: usize,
    pub calib_mode: CalibMode,
    pub stats: Stats,
    /// Per sensor: `size² × 3K` calibration stack.
    pub calib: Vec<Vec<f32>>,
    /// `[sensor][contact]`: `size² × 3` normalized signal.
    pub signals: Vec<Vec<Vec<f32>>>,
    /// Per contact: `size² × 3` target normals.
    pub normals: Vec<Vec<f32>>,
}

impl InMemoryDataset {
    pub fn load(root: &Path, opts: &LoadOptions) -> Result<Self> {
        let manifest = DatasetManifest::load(root)?;
        manifest.check_integrity(root)?;
        let stats = opts.stats.unwrap_or(manifest.stats);
        let size = opts.image_size;
        let calib = manifest
            .sensors
            .par_iter()
            .map(|s| {
                let bg = read_image(&root.join(&s.background_path))?;
                let images = opts
                    .calib_mode
                    .select(&s.calibration)?
                    .into_iter()
                    .map(|i| read_image(&root.join(&s.calibration_paths[i])))
                    .collect::<Result<Vec<_>>>()?;
                stack_calibration(&images, &bg, &stats, size)
            })
            .collect::<Result<Vec<_>>>()?;
        let table = manifest.sample_table();
        let signals = manifest
            .sensors
            .par_iter()
            .zip(&table)
            .map(|(s, row)| {
                let bg = read_image(&root.join(&s.background_path))?;
                row.iter()
                    .enumerate()
                    .map(|(c, k)| {
                        let k = k.ok_or_else(|| {
                            Error::Manifest(format!("no sample for ({}, {})", s.sensor_id, manifest.contacts[c].contact_id))
                        })?;
                        let img = read_image(&root.join(&manifest.samples[k].image_path))?;
                        preprocess(&img, &bg, &stats, size)
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let normals = table
            .first()
            .ok_or_else(|| Error::Manifest("dataset has no sensors".into()))?
            .par_iter()
            .map(|k| {
                let path = root.join(&manifest.samples[k.expect("checked above")].normal_path);
                let (dims, n) = read_f32(&path)?;
                let r = manifest.resolution;
                if dims != [r, r, 3] {
                    return Err(Error::Format { kind: "TNSR", path, detail: format!("normal dims {dims:?}") });
                }
                Ok(if r == size { n } else { resize_bilinear(&n, r, r, 3, size, size) })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(InMemoryDataset {
            root: root.to_path_buf(),
            manifest,
            image_size: size,
            calib_mode: opts.calib_mode,
            stats,
            calib,
            signals,
            normals,
        })
    }

    pub fn n_sensors(&self) -> usize {
        self.signals.len()
    }

    pub fn n_contacts(&self) -> usize {
        self.normals.len()
    }

    pub fn k(&self) -> usize {
        self.calib_mode.count()
    }
}

/// Two-view training batch, all arrays channels-last.
#[derive(Clone, Debug, PartialEq)]
pub struct Batch {
    pub size: usize,
    pub k: usize,
    pub images: Vec<f32>,
    pub calib_stacks: Vec<f32>,
    pub normals: Vec<f32>,
    pub contact_labels: Vec<usize>,
    pub sensor_ids: Vec<usize>,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.contact_labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.contact_labels.is_empty()
    }
}

/// For each contact draws an ordered pair of distinct sensors uniformly and
/// emits both views, each with its own sensor's calibration stack.
pub fn make_aligned_batch(
    data: &InMemoryDataset,
    contacts: &[usize],
    rng: &mut ChaCha8Rng,
    augment_views: bool,
) -> Result<Batch> {
    let n = data.n_sensors();
    if n < 2 {
        return Err(Error::config(format!("aligned batches need ≥ 2 sensors, dataset has {n}")));
    }
    let (size, k) = (data.image_size, data.k());
    let mut batch = Batch {
        size,
        k,
        images: Vec::with_capacity(2 * contacts.len() * size * size * 3),
        calib_stacks: Vec::with_capacity(2 * contacts.len() * size * size * 3 * k),
        normals: Vec::with_capacity(2 * contacts.len() * size * size * 3),
        contact_labels: Vec::with_capacity(2 * contacts.len()),
        sensor_ids: Vec::with_capacity(2 * contacts.len()),
    };
    for &c in contacts {
        if c >= data.n_contacts() {
            return Err(Error::Contract(format!("contact index {c} out of range")));
        }
        let a = rng.random_range(0..n);
        let mut b = rng.random_range(0..n - 1);
        if b >= a {
            b += 1;
        }
        for s in [a, b] {
            let mut signal = data.signals[s][c].clone();
            let mut calib = data.calib[s].clone();
            augment(&mut signal, &mut calib, size, k, augment_views.then_some(&mut *rng));
            batch.images.extend_from_slice(&signal);
            batch.calib_stacks.extend_from_slice(&calib);
            batch.normals.extend_from_slice(&data.normals[c]);
            batch.contact_labels.push(c);
            batch.sensor_ids.push(s);
        }
    }
    Ok(batch)
}
