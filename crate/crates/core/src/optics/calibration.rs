use rand::Rng;
use serde::{Deserialize, Serialize};

use super::scene::ContactScene;
use super::sensor::SensorConfig;
use super::shade::{render_background, render_contact, TactileImage};
use super::WINDOW_MM;
use crate::seed::rng_for;
use crate::{Error, Result};

pub const BALL_RADIUS_MM: f64 = 2.0;
pub const CUBE_EDGE_MM: f64 = 4.0;
pub const CALIB_DEPTH_MM: f64 = 1.0;
const JITTER_FRACTION: f64 = 0.05;

/// Which calibration presses a sensor contributes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CalibMode {
    K0,
    K4,
    K9,
    K8,
    K18,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CalibObject {
    Ball4mm,
    CubeCorner,
}

impl CalibObject {
    fn offset(self) -> usize {
        match self {
            CalibObject::Ball4mm => 0,
            CalibObject::CubeCorner => 9,
        }
    }
}

const GRID: [(usize, usize); 9] = [
    (0, 0), (0, 1), (0, 2),
    (1, 0), (1, 1), (1, 2),
    (2, 0), (2, 1), (2, 2),
];
const CORNERS: [(usize, usize); 4] = [(0, 0), (0, 2), (2, 0), (2, 2)];

impl CalibMode {
    pub const ALL: [CalibMode; 5] = [CalibMode::K0, CalibMode::K4, CalibMode::K9, CalibMode::K8, CalibMode::K18];

    pub fn count(self) -> usize {
        match self {
            CalibMode::K0 => 0,
            CalibMode::K4 => 4,
            CalibMode::K9 => 9,
            CalibMode::K8 => 8,
            CalibMode::K18 => 18,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            CalibMode::K0 => "k0",
            CalibMode::K4 => "k4",
            CalibMode::K9 => "k9",
            CalibMode::K8 => "k8",
            CalibMode::K18 => "k18",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        CalibMode::ALL
            .into_iter()
            .find(|m| m.label() == s)
            .ok_or_else(|| Error::config(format!("unknown calibration mode '{s}'")))
    }

    /// (object, grid row, grid column) per press, in stacking order.
    pub fn layout(self) -> Vec<(CalibObject, usize, usize)> {
        let cells = |obj: CalibObject, cells: &[(usize, usize)]| {
            cells.iter().map(move |&(r, c)| (obj, r, c)).collect::<Vec<_>>()
        };
        let (ball, cube) = (CalibObject::Ball4mm, CalibObject::CubeCorner);
        match self {
            CalibMode::K0 => vec![],
            CalibMode::K4 => cells(ball, &CORNERS),
            CalibMode::K9 => cells(ball, &GRID),
            CalibMode::K8 => [cells(ball, &CORNERS), cells(cube, &CORNERS)].concat(),
            CalibMode::K18 => [cells(ball, &GRID), cells(cube, &GRID)].concat(),
        }
    }

    /// Positions in `available` that make up this mode, in stacking order.
    pub fn select(self, available: &[CalibrationDescriptor]) -> Result<Vec<usize>> {
        self.layout()
            .into_iter()
            .map(|(obj, r, c)| {
                let index = obj.offset() + r * 3 + c;
                available.iter().position(|d| d.index == index).ok_or_else(|| {
                    Error::config(format!(
                        "calibration press {index} needed by {} is not in the dataset",
                        self.label()
                    ))
                })
            })
            .collect()
    }
}

/// Where and with what one calibration image was pressed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationDescriptor {
    /// Stable id: 0..9 ball grid cells, 9..18 cube grid cells (row-major).
    pub index: usize,
    pub object: CalibObject,
    pub grid: [usize; 2],
    pub position_mm: [f64; 2],
    pub jitter_mm: [f64; 2],
}

impl CalibrationDescriptor {
    pub fn scene(&self) -> ContactScene {
        let x = self.position_mm[0] + self.jitter_mm[0];
        let y = self.position_mm[1] + self.jitter_mm[1];
        let (prim, size) = match self.object {
            CalibObject::Ball4mm => ("sphere", BALL_RADIUS_MM),
            CalibObject::CubeCorner => ("cube_corner", CUBE_EDGE_MM),
        };
        ContactScene::new(&format!("calib_{:02}", self.index), prim, &[size], [x, y], CALIB_DEPTH_MM)
    }
}

/// Calibration presses of one sensor plus its no-contact frame.
#[derive(Clone, Debug, PartialEq)]
pub struct CalibrationSet {
    pub mode: CalibMode,
    pub images: Vec<TactileImage>,
    pub descriptors: Vec<CalibrationDescriptor>,
    pub background: TactileImage,
}

pub fn calibration_descriptors(sensor_id: &str, mode: CalibMode, seed: u64) -> Vec<CalibrationDescriptor> {
    let fractions = [0.25, 0.5, 0.75];
    mode.layout()
        .into_iter()
        .map(|(object, r, c)| {
            let index = object.offset() + r * 3 + c;
            let mut rng = rng_for(seed, &format!("calib/{sensor_id}/{index}"));
            let span = JITTER_FRACTION * WINDOW_MM;
            let jitter = [rng.random_range(-span..=span), rng.random_range(-span..=span)];
            CalibrationDescriptor {
                index,
                object,
                grid: [r, c],
                position_mm: [(fractions[c] - 0.5) * WINDOW_MM, (fractions[r] - 0.5) * WINDOW_MM],
                jitter_mm: jitter,
            }
        })
        .collect()
}

pub fn make_calibration_set(cfg: &SensorConfig, mode: CalibMode, seed: u64) -> Result<CalibrationSet> {
    let descriptors = calibration_descriptors(&cfg.sensor_id, mode, seed);
    let images = descriptors
        .iter()
        .map(|d| render_contact(&d.scene(), cfg))
        .collect::<Result<Vec<_>>>()?;
    Ok(CalibrationSet {
        mode,
        images,
        descriptors,
        background: render_background(cfg),
    })
}
