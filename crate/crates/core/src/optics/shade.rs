use super::normals::{normal_from_height, NormalMap};
use super::scene::{raw_imprint, spread, ContactScene, HeightMap};
use super::sensor::{LightOrientation, LightShape, SensorConfig};
use super::vec3::Vec3;
use super::pixel_center_mm;
use crate::{Error, Result};

const K_DIFFUSE: f64 = 0.8;
const SHININESS: i32 = 32;
const AREA_SAMPLES: usize = 16;

/// RGB tactile reading, `resolution × resolution × 3`.
#[derive(Clone, Debug, PartialEq)]
pub struct TactileImage {
    pub resolution: usize,
    pub values: Vec<f32>,
    pub is_background_subtracted: bool,
}

impl TactileImage {
    pub fn new(resolution: usize, values: Vec<f32>) -> Self {
        TactileImage {
            resolution,
            values,
            is_background_subtracted: false,
        }
    }

    /// Contact-induced signal `self − background`, in [−1, 1].
    pub fn subtract(&self, background: &TactileImage) -> Result<TactileImage> {
        if self.values.len() != background.values.len() {
            return Err(Error::Contract(format!(
                "image of {} values vs background of {}",
                self.values.len(),
                background.values.len()
            )));
        }
        Ok(TactileImage {
            resolution: self.resolution,
            values: self.values.iter().zip(&background.values).map(|(a, b)| a - b).collect(),
            is_background_subtracted: true,
        })
    }

    pub fn l1(&self) -> f64 {
        self.values.iter().map(|v| v.abs() as f64).sum()
    }
}

/// World positions of each light's emitting points.
fn light_samples(cfg: &SensorConfig) -> Vec<Vec<Vec3>> {
    let half = cfg.sensing_width_mm() / 2.0;
    let base = match cfg.light_orientation {
        LightOrientation::Sides => 0.0,
        LightOrientation::Corners => std::f64::consts::FRAC_PI_4,
    };
    let elev = cfg.light_angle_deg.to_radians().tan();
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..cfg.num_lights)
        .map(|l| {
            let phi = base + l as f64 * std::f64::consts::TAU / cfg.num_lights as f64;
            let (s, c) = phi.sin_cos();
            // ray from the center to the square pad's perimeter
            let dist = half / c.abs().max(s.abs());
            let center = Vec3::new(c * dist, s * dist, dist * elev);
            match cfg.light_shape {
                LightShape::Point => vec![center],
                LightShape::Area { radius_mm } => (0..AREA_SAMPLES)
                    .map(|j| {
                        let r = radius_mm * ((j as f64 + 0.5) / AREA_SAMPLES as f64).sqrt();
                        let (sj, cj) = (j as f64 * golden).sin_cos();
                        center + Vec3::new(r * cj, r * sj, 0.0)
                    })
                    .collect(),
            }
        })
        .collect()
}

/// Blinn-Phong local shading of the deformed gel under the sensor's lights.
pub fn shade(h: &HeightMap, n: &NormalMap, cfg: &SensorConfig) -> Result<TactileImage> {
    if h.resolution != n.resolution {
        return Err(Error::Contract(format!(
            "height map {}² vs normal map {}²",
            h.resolution, n.resolution
        )));
    }
    let res = h.resolution;
    let lights = light_samples(cfg);
    let camera = Vec3::new(0.0, 0.0, cfg.camera_height_mm());
    let ks = cfg.gel_specularity;
    let mut values = vec![0f32; res * res * 3];
    for row in 0..res {
        for col in 0..res {
            let (x, y) = pixel_center_mm(row, col, res);
            let p = Vec3::new(x, y, h.at(row, col));
            let [nx, ny, nz] = n.at(row, col);
            let normal = Vec3::new(nx, ny, nz);
            let view = (camera - p).normalized();
            let mut rgb = [0.0f64; 3];
            for (l, samples) in lights.iter().enumerate() {
                let mut term = 0.0;
                for &pos in samples {
                    let w = (pos - p).normalized();
                    let half = (w + view).normalized();
                    term += K_DIFFUSE * normal.dot(w).max(0.0)
                        + ks * normal.dot(half).max(0.0).powi(SHININESS);
                }
                term /= samples.len() as f64;
                for (c, v) in rgb.iter_mut().enumerate() {
                    *v += cfg.light_colors[l][c] * term;
                }
            }
            let i = (row * res + col) * 3;
            for c in 0..3 {
                values[i + c] = rgb[c].clamp(0.0, 1.0) as f32;
            }
        }
    }
    Ok(TactileImage::new(res, values))
}

/// No-contact frame of a sensor.
pub fn render_background(cfg: &SensorConfig) -> TactileImage {
    let r = cfg.resolution;
    shade(&HeightMap::zeros(r), &NormalMap::flat(r), cfg).expect("matching resolutions")
}

/// Raw tactile image of `scene` pressed into the sensor's gel.
pub fn render_contact(scene: &ContactScene, cfg: &SensorConfig) -> Result<TactileImage> {
    render_imprint(&raw_imprint(scene, cfg.resolution)?, cfg)
}

/// Renders a rigid imprint shared across sensors (see [`raw_imprint`]).
pub fn render_imprint(raw: &HeightMap, cfg: &SensorConfig) -> Result<TactileImage> {
    let h = spread(raw, cfg)?;
    let n = normal_from_height(&h);
    shade(&h, &n, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sphere(depth: f64) -> ContactScene {
        ContactScene::new("c", "sphere", &[2.0], [0.0, 0.0], depth)
    }

    #[test]
    fn black_lights_black_image() {
        let mut cfg = SensorConfig::reference("s", 32);
        cfg.light_colors = vec![[0.0; 3]; 3];
        let img = render_contact(&sphere(0.5), &cfg).unwrap();
        assert!(img.values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn linear_in_light_color() {
        let mut a = SensorConfig::reference("s", 32);
        a.light_colors = vec![[0.4, 0.2, 0.1], [0.1, 0.3, 0.2], [0.2, 0.1, 0.4]];
        let mut b = a.clone();
        b.light_colors = vec![[0.4, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]];
        let mut c = a.clone();
        c.light_colors = vec![[0.2, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]];
        let ib = render_contact(&sphere(0.6), &b).unwrap();
        let ic = render_contact(&sphere(0.6), &c).unwrap();
        for (x, y) in ib.values.iter().zip(&ic.values) {
            assert!((x - 2.0 * y).abs() < 1e-6);
        }
    }

    #[test]
    fn deeper_press_stronger_signal() {
        let cfg = SensorConfig::reference("s", 64);
        let bg = render_background(&cfg);
        let l1: Vec<f64> = [0.2, 0.4, 0.8]
            .iter()
            .map(|&d| render_contact(&sphere(d), &cfg).unwrap().subtract(&bg).unwrap().l1())
            .collect();
        assert!(l1[0] < l1[1] && l1[1] < l1[2], "{l1:?}");
    }

    #[test]
    fn background_properties() {
        let cfg = SensorConfig::reference("s", 32);
        let bg = render_background(&cfg);
        assert!(bg.subtract(&bg).unwrap().values.iter().all(|v| *v == 0.0));
        let mean = bg.values.iter().map(|v| *v as f64).sum::<f64>() / bg.values.len() as f64;
        let var = bg.values.iter().map(|v| (*v as f64 - mean).powi(2)).sum::<f64>();
        assert!(var > 0.0);
        assert_eq!(render_background(&cfg), bg);
    }

    #[test]
    fn area_lights_and_corners_render() {
        let mut cfg = SensorConfig::reference("s", 32);
        cfg.light_shape = LightShape::Area { radius_mm: 2.0 };
        cfg.light_orientation = LightOrientation::Corners;
        let img = render_contact(&sphere(0.5), &cfg).unwrap();
        assert!(img.values.iter().all(|v| (0.0..=1.0).contains(v)));
        assert_ne!(img, render_contact(&sphere(0.5), &SensorConfig::reference("s", 32)).unwrap());
    }
}
