use std::collections::{HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::IoContext;
use crate::optics::{CalibMode, CalibrationDescriptor, ContactScene, SensorConfig};
use crate::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const MANIFEST_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Eval,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensorEntry {
    pub sensor_id: String,
    pub config: SensorConfig,
    pub calibration_paths: Vec<String>,
    pub calibration: Vec<CalibrationDescriptor>,
    pub background_path: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContactEntry {
    pub contact_id: String,
    pub primitive: String,
    pub params: Vec<f64>,
    pub class_label: usize,
    /// Indenter position `(x, y, depth)` in millimeters.
    pub pose_mm: [f64; 3],
    /// Presses sharing an object id use the same physical indenter.
    pub object_id: usize,
    pub split: Split,
    pub scene: ContactScene,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleEntry {
    pub sensor_id: String,
    pub contact_id: String,
    pub image_path: String,
    pub normal_path: String,
}

/// Per-channel statistics of background-subtracted training images.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub mean: [f64; 3],
    pub std: [f64; 3],
}

impl Stats {
    pub const IDENTITY: Stats = Stats { mean: [0.0; 3], std: [1.0; 3] };
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub version: u32,
    pub global_seed: u64,
    pub resolution: usize,
    pub calib_mode: CalibMode,
    pub classes: Vec<String>,
    pub sensor_aligned: bool,
    pub sensors: Vec<SensorEntry>,
    pub contacts: Vec<ContactEntry>,
    pub samples: Vec<SampleEntry>,
    pub stats: Stats,
}

impl DatasetManifest {
    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        let text = std::fs::read_to_string(&path).at(&path)?;
        serde_json::from_str(&text).map_err(|e| Error::Format {
            kind: "manifest",
            path,
            detail: e.to_string(),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        let path = dir.join(MANIFEST_FILE);
        std::fs::write(&path, self.to_json()).at(&path)
    }

    pub fn sensor_index(&self, id: &str) -> Option<usize> {
        self.sensors.iter().position(|s| s.sensor_id == id)
    }

    pub fn contact_index(&self, id: &str) -> Option<usize> {
        self.contacts.iter().position(|c| c.contact_id == id)
    }

    /// `table[sensor][contact]` → sample index, where present.
    pub fn sample_table(&self) -> Vec<Vec<Option<usize>>> {
        let s_idx: HashMap<&str, usize> =
            self.sensors.iter().enumerate().map(|(i, s)| (s.sensor_id.as_str(), i)).collect();
        let c_idx: HashMap<&str, usize> =
            self.contacts.iter().enumerate().map(|(i, c)| (c.contact_id.as_str(), i)).collect();
        let mut table = vec![vec![None; self.contacts.len()]; self.sensors.len()];
        for (k, s) in self.samples.iter().enumerate() {
            if let (Some(&i), Some(&j)) = (s_idx.get(s.sensor_id.as_str()), c_idx.get(s.contact_id.as_str())) {
                table[i][j] = Some(k);
            }
        }
        table
    }

    pub fn contacts_in(&self, split: Split) -> Vec<usize> {
        (0..self.contacts.len()).filter(|&i| self.contacts[i].split == split).collect()
    }

    /// Referential integrity: ids declared once, every reference resolves,
    /// every path exists under `root`, and alignment holds when flagged.
    pub fn check_integrity(&self, root: &Path) -> Result<()> {
        let fail = |m: String| Err(Error::Manifest(m));
        if self.version != MANIFEST_VERSION {
            return fail(format!("unsupported version {}", self.version));
        }
        let mut sensors = HashSet::new();
        for s in &self.sensors {
            if !sensors.insert(s.sensor_id.as_str()) {
                return fail(format!("duplicate sensor id {}", s.sensor_id));
            }
            if s.config.sensor_id != s.sensor_id {
                return fail(format!("sensor {} carries config for {}", s.sensor_id, s.config.sensor_id));
            }
            if s.calibration_paths.len() != s.calibration.len() {
                return fail(format!("sensor {} calibration paths and descriptors differ", s.sensor_id));
            }
            s.config.validate()?;
        }
        let mut contacts = HashSet::new();
        for c in &self.contacts {
            if !contacts.insert(c.contact_id.as_str()) {
                return fail(format!("duplicate contact id {}", c.contact_id));
            }
            if c.class_label >= self.classes.len() {
                return fail(format!("contact {} has class {} of {}", c.contact_id, c.class_label, self.classes.len()));
            }
            if c.scene.contact_id != c.contact_id || c.scene.primitive != c.primitive {
                return fail(format!("contact {} scene does not match its entry", c.contact_id));
            }
        }
        let mut pairs = HashSet::new();
        for s in &self.samples {
            if !sensors.contains(s.sensor_id.as_str()) {
                return fail(format!("sample references undeclared sensor {}", s.sensor_id));
            }
            if !contacts.contains(s.contact_id.as_str()) {
                return fail(format!("sample references undeclared contact {}", s.contact_id));
            }
            if !pairs.insert((s.sensor_id.as_str(), s.contact_id.as_str())) {
                return fail(format!("duplicate sample ({}, {})", s.sensor_id, s.contact_id));
            }
        }
        if self.sensor_aligned && pairs.len() != sensors.len() * contacts.len() {
            return fail(format!(
                "sensor-aligned manifest has {} of {} samples",
                pairs.len(),
                sensors.len() * contacts.len()
            ));
        }
        if self.stats.std.iter().any(|s| !(*s > 0.0)) {
            return fail(format!("non-positive stats std {:?}", self.stats.std));
        }
        let paths = self
            .sensors
            .iter()
            .flat_map(|s| s.calibration_paths.iter().chain(std::iter::once(&s.background_path)))
            .chain(self.samples.iter().flat_map(|s| [&s.image_path, &s.normal_path]));
        for p in paths {
            if !root.join(p).is_file() {
                return fail(format!("missing file {p}"));
            }
        }
        Ok(())
    }
}
