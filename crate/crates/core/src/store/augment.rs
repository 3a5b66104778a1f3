use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::filters::gaussian_blur_f32;

/// One augmentation draw, shared by a sample's signal and its calibration stack.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AugmentParams {
    pub gain: [f32; 3],
    pub offset: [f32; 3],
    pub sigma_px: f64,
}

impl AugmentParams {
    pub const IDENTITY: AugmentParams = AugmentParams { gain: [1.0; 3], offset: [0.0; 3], sigma_px: 0.0 };

    pub fn sample(rng: &mut ChaCha8Rng) -> Self {
        let mut gain = [0.0; 3];
        let mut offset = [0.0; 3];
        for c in 0..3 {
            gain[c] = rng.random_range(0.9..1.1);
            offset[c] = rng.random_range(-0.02..0.02);
        }
        AugmentParams { gain, offset, sigma_px: rng.random_range(0.0..1.0) }
    }

    /// Applies color jitter then blur to an `res² × channels` image whose
    /// channels cycle through RGB.
    pub fn apply(&self, data: &mut Vec<f32>, res: usize, channels: usize) {
        if channels == 0 || *self == Self::IDENTITY {
            return;
        }
        for (i, v) in data.iter_mut().enumerate() {
            let c = (i % channels) % 3;
            *v = *v * self.gain[c] + self.offset[c];
        }
        if self.sigma_px > 0.0 {
            *data = gaussian_blur_f32(data, res, res, channels, self.sigma_px);
        }
    }
}

/// Augments a signal and its calibration stack with one shared draw;
/// `rng = None` (evaluation) is the identity.
pub fn augment(signal: &mut Vec<f32>, calib: &mut Vec<f32>, res: usize, k: usize, rng: Option<&mut ChaCha8Rng>) {
    if let Some(rng) = rng {
        let p = AugmentParams::sample(rng);
        p.apply(signal, res, 3);
        p.apply(calib, res, 3 * k);
    }
}
