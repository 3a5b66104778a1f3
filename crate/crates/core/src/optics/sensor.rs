use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::seed::rng_for;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LightShape {
    Point,
    Area { radius_mm: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LightOrientation {
    Sides,
    Corners,
}

/// Optical and mechanical parameters of one simulated sensor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensorConfig {
    pub sensor_id: String,
    pub num_lights: usize,
    pub light_shape: LightShape,
    pub light_orientation: LightOrientation,
    /// Elevation of each light above the gel plane, seen from the gel center.
    pub light_angle_deg: f64,
    pub light_colors: Vec<[f64; 3]>,
    pub gel_stiffness: f64,
    pub gel_specularity: f64,
    pub camera_fov_deg: f64,
    pub sensing_area_cm2: f64,
    pub resolution: usize,
}

pub(crate) const LIGHT_ANGLE_RANGE: (f64, f64) = (5.0, 30.0);
pub(crate) const FOV_RANGE: (f64, f64) = (40.0, 90.0);
pub(crate) const AREA_RANGE: (f64, f64) = (4.0, 16.0);
const AREA_LIGHT_RADIUS_RANGE: (f64, f64) = (1.0, 3.0);

fn in_range(name: &str, v: f64, (lo, hi): (f64, f64)) -> Result<()> {
    if !(lo..=hi).contains(&v) {
        return Err(Error::config(format!("{name} = {v} outside [{lo}, {hi}]")));
    }
    Ok(())
}

impl SensorConfig {
    /// Three side lights in R, G, B at mid-range settings.
    pub fn reference(sensor_id: &str, resolution: usize) -> Self {
        SensorConfig {
            sensor_id: sensor_id.to_string(),
            num_lights: 3,
            light_shape: LightShape::Point,
            light_orientation: LightOrientation::Sides,
            light_angle_deg: 15.0,
            light_colors: vec![[1.0, 0.2, 0.2], [0.2, 1.0, 0.2], [0.2, 0.2, 1.0]],
            gel_stiffness: 0.5,
            gel_specularity: 0.3,
            camera_fov_deg: 70.0,
            sensing_area_cm2: 9.0,
            resolution,
        }
    }

    pub fn validate(&self) -> Result<()> {
        in_range("light_angle_deg", self.light_angle_deg, LIGHT_ANGLE_RANGE)?;
        in_range("camera_fov_deg", self.camera_fov_deg, FOV_RANGE)?;
        in_range("sensing_area_cm2", self.sensing_area_cm2, AREA_RANGE)?;
        in_range("gel_stiffness", self.gel_stiffness, (0.0, 1.0))?;
        in_range("gel_specularity", self.gel_specularity, (0.0, 1.0))?;
        if self.num_lights == 0 {
            return Err(Error::config("num_lights must be at least 1"));
        }
        if self.light_colors.len() != self.num_lights {
            return Err(Error::config(format!(
                "{} light colors for {} lights",
                self.light_colors.len(),
                self.num_lights
            )));
        }
        for c in self.light_colors.iter().flatten() {
            in_range("light color", *c, (0.0, 1.0))?;
        }
        if let LightShape::Area { radius_mm } = self.light_shape {
            if radius_mm.is_nan() || radius_mm < 0.0 {
                return Err(Error::config("area light radius must be non-negative"));
            }
        }
        if self.resolution < 2 {
            return Err(Error::config("resolution must be at least 2"));
        }
        Ok(())
    }

    /// Side length of the square gel pad in millimeters.
    pub fn sensing_width_mm(&self) -> f64 {
        (self.sensing_area_cm2 * 100.0).sqrt()
    }

    /// Height of the pinhole above the gel so the pad fills the field of view.
    pub fn camera_height_mm(&self) -> f64 {
        0.5 * self.sensing_width_mm() / (0.5 * self.camera_fov_deg.to_radians()).tan()
    }

    /// Gel spread in pixels; scaled from the 224-pixel reference.
    pub fn blur_sigma_px(&self) -> f64 {
        (6.0 - 5.0 * self.gel_stiffness) * self.resolution as f64 / 224.0
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: SensorConfig =
            serde_json::from_str(text).map_err(|e| Error::config(format!("sensor config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Draws one sensor uniformly inside the simulated parameter bounds.
pub fn sample_sensor_config(seed: u64, index: usize) -> SensorConfig {
    let mut rng = rng_for(seed, &format!("sensor/{index}"));
    let num_lights = 3;
    let light_shape = if rng.random_bool(0.5) {
        LightShape::Point
    } else {
        LightShape::Area {
            radius_mm: rng.random_range(AREA_LIGHT_RADIUS_RANGE.0..AREA_LIGHT_RADIUS_RANGE.1),
        }
    };
    let light_orientation = if rng.random_bool(0.5) {
        LightOrientation::Sides
    } else {
        LightOrientation::Corners
    };
    let light_angle_deg = rng.random_range(LIGHT_ANGLE_RANGE.0..=LIGHT_ANGLE_RANGE.1);
    let mut channels = [0usize, 1, 2];
    channels.shuffle(&mut rng);
    let light_colors = (0..num_lights)
        .map(|l| {
            let mut c = [0.0; 3];
            for v in c.iter_mut() {
                *v = rng.random_range(0.3..=1.0);
            }
            // the brightest draw goes to this light's dominant channel
            let dominant = channels[l % 3];
            let brightest = (0..3)
                .max_by(|&a, &b| c[a].partial_cmp(&c[b]).unwrap())
                .unwrap();
            c.swap(dominant, brightest);
            c
        })
        .collect();
    SensorConfig {
        sensor_id: format!("sensor_{index:03}"),
        num_lights,
        light_shape,
        light_orientation,
        light_angle_deg,
        light_colors,
        gel_stiffness: rng.random_range(0.0..=1.0),
        gel_specularity: rng.random_range(0.0..=1.0),
        camera_fov_deg: rng.random_range(FOV_RANGE.0..=FOV_RANGE.1),
        sensing_area_cm2: rng.random_range(AREA_RANGE.0..=AREA_RANGE.1),
        resolution: 224,
    }
}
