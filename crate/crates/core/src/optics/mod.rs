//! Optical tactile-sensor simulator.
//!
//! Contact geometry lives in a fixed imaging window of [`WINDOW_MM`] width
//! shared by every sensor, so a contact's ground-truth normal map does not
//! depend on the sensor that observes it. Sensor parameters (lights, gel,
//! camera, pad size) change how that geometry is deformed and shaded.

mod calibration;
mod indenter;
mod normals;
mod scene;
mod sensor;
mod shade;
mod vec3;

pub use calibration::{
    calibration_descriptors, make_calibration_set, CalibMode, CalibObject, CalibrationDescriptor,
    CalibrationSet,
};
pub use indenter::{Indenter, IndenterRegistry, IndenterSpec};
pub use normals::{normal_from_height, NormalMap};
pub use scene::{imprint, raw_imprint, spread, target_normals, ContactScene, HeightMap};
pub use sensor::{sample_sensor_config, LightOrientation, LightShape, SensorConfig};
pub use shade::{render_background, render_contact, render_imprint, shade, TactileImage};
pub use vec3::Vec3;

/// Side length of the imaged gel window, in millimeters.
pub const WINDOW_MM: f64 = 16.0;

/// Maximum gel indentation, in millimeters.
pub const GEL_THICKNESS_MM: f64 = 3.0;

pub fn pixel_pitch_mm(resolution: usize) -> f64 {
    WINDOW_MM / resolution as f64
}

/// Physical (x, y) of the center of pixel (row, col); origin at the window center.
pub fn pixel_center_mm(row: usize, col: usize, resolution: usize) -> (f64, f64) {
    let p = pixel_pitch_mm(resolution);
    let half = resolution as f64 / 2.0;
    ((col as f64 + 0.5 - half) * p, (row as f64 + 0.5 - half) * p)
}
