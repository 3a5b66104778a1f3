use serde::{Deserialize, Serialize};

use super::indenter::IndenterRegistry;
use super::normals::{normal_from_height, NormalMap};
use super::sensor::SensorConfig;
use super::vec3::{Mat3, Vec3};
use super::{pixel_center_mm, pixel_pitch_mm, GEL_THICKNESS_MM, WINDOW_MM};
use crate::filters::gaussian_blur;
use crate::{Error, Result};

/// One indenter press: the unit of sensor-aligned sampling.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContactScene {
    pub contact_id: String,
    pub primitive: String,
    pub params: Vec<f64>,
    /// Euler angles (x, y, z) in degrees, applied as Rz·Ry·Rx.
    pub rotation_deg: [f64; 3],
    /// Offset of the indenter axis on the gel plane, in millimeters.
    pub translation_mm: [f64; 2],
    pub press_depth_mm: f64,
}

impl ContactScene {
    pub fn new(contact_id: &str, primitive: &str, params: &[f64], translation_mm: [f64; 2], depth: f64) -> Self {
        ContactScene {
            contact_id: contact_id.to_string(),
            primitive: primitive.to_string(),
            params: params.to_vec(),
            rotation_deg: [0.0; 3],
            translation_mm,
            press_depth_mm: depth,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.press_depth_mm > 0.0 && self.press_depth_mm <= GEL_THICKNESS_MM) {
            return Err(Error::config(format!(
                "press depth {} mm outside (0, {GEL_THICKNESS_MM}]",
                self.press_depth_mm
            )));
        }
        let half = WINDOW_MM / 2.0;
        if self.translation_mm.iter().any(|t| t.abs() > half) {
            return Err(Error::config(format!(
                "translation {:?} leaves the sensing window",
                self.translation_mm
            )));
        }
        IndenterRegistry::global().build(&self.primitive, &self.params)?;
        Ok(())
    }
}

/// Gel displacement toward the camera, in millimeters, on a square grid.
#[derive(Clone, Debug, PartialEq)]
pub struct HeightMap {
    pub resolution: usize,
    pub pixel_pitch_mm: f64,
    pub values: Vec<f64>,
}

impl HeightMap {
    pub fn zeros(resolution: usize) -> Self {
        HeightMap {
            resolution,
            pixel_pitch_mm: pixel_pitch_mm(resolution),
            values: vec![0.0; resolution * resolution],
        }
    }

    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.resolution + col]
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(0.0, f64::max)
    }
}

/// Rigid imprint before gel spreading: `max(0, depth − b)` where `b` is the
/// indenter's lower surface measured from its lowest point on the grid.
pub fn raw_imprint(scene: &ContactScene, resolution: usize) -> Result<HeightMap> {
    if !(scene.press_depth_mm > 0.0 && scene.press_depth_mm <= GEL_THICKNESS_MM) {
        return Err(Error::config(format!("press depth {} mm", scene.press_depth_mm)));
    }
    let shape = IndenterRegistry::global().build(&scene.primitive, &scene.params)?;
    let [a, b, c] = scene.rotation_deg.map(f64::to_radians);
    let to_object = Mat3::from_euler(a, b, c).transpose();
    let center = Vec3::new(scene.translation_mm[0], scene.translation_mm[1], 0.0);
    let radius = shape.bounding_radius();
    let start_z = -radius - 1.0;
    let dir = to_object.apply(Vec3::new(0.0, 0.0, 1.0));
    let mut lower = vec![f64::INFINITY; resolution * resolution];
    for row in 0..resolution {
        for col in 0..resolution {
            let (x, y) = pixel_center_mm(row, col, resolution);
            let (dx, dy) = (x - center.x, y - center.y);
            if dx * dx + dy * dy > radius * radius {
                continue;
            }
            let origin = to_object.apply(Vec3::new(x, y, start_z) - center);
            if let Some(t) = shape.first_hit(origin, dir, 2.0 * radius + 2.0) {
                lower[row * resolution + col] = start_z + t;
            }
        }
    }
    let floor = lower.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut map = HeightMap::zeros(resolution);
    if floor.is_finite() {
        for (v, z) in map.values.iter_mut().zip(&lower) {
            *v = (scene.press_depth_mm - (z - floor)).max(0.0);
        }
    }
    Ok(map)
}

/// Gel surface under contact: the rigid imprint spread by the gel's stiffness.
pub fn imprint(scene: &ContactScene, cfg: &SensorConfig) -> Result<HeightMap> {
    spread(&raw_imprint(scene, cfg.resolution)?, cfg)
}

/// Applies a sensor's gel spreading to a precomputed rigid imprint.
pub fn spread(raw: &HeightMap, cfg: &SensorConfig) -> Result<HeightMap> {
    let r = cfg.resolution;
    if raw.resolution != r {
        return Err(Error::Contract(format!("imprint at {}² for a {r}² sensor", raw.resolution)));
    }
    let values = gaussian_blur(&raw.values, r, r, 1, cfg.blur_sigma_px());
    Ok(HeightMap { values, ..raw.clone() })
}

/// Sensor-independent supervision target: normals of the rigid contact surface.
pub fn target_normals(scene: &ContactScene, resolution: usize) -> Result<NormalMap> {
    Ok(normal_from_height(&raw_imprint(scene, resolution)?))
}
