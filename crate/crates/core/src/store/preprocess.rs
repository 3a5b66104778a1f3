use super::manifest::Stats;
use crate::filters::resize_bilinear;
use crate::optics::TactileImage;
use crate::{Error, Result};

/// `((image − background) − mean) / std` per channel, resized to `size²`.
pub fn preprocess(image: &TactileImage, background: &TactileImage, stats: &Stats, size: usize) -> Result<Vec<f32>> {
    if stats.std.iter().any(|s| !(*s > 0.0)) {
        return Err(Error::config(format!("normalization std {:?} must be positive", stats.std)));
    }
    let signal = image.subtract(background)?;
    let out: Vec<f32> = signal
        .values
        .iter()
        .enumerate()
        .map(|(i, &v)| ((v as f64 - stats.mean[i % 3]) / stats.std[i % 3]) as f32)
        .collect();
    let r = image.resolution;
    Ok(if r == size { out } else { resize_bilinear(&out, r, r, 3, size, size) })
}

/// Channel-concatenates preprocessed calibration images: `size² × 3K`.
pub fn stack_calibration(
    images: &[TactileImage],
    background: &TactileImage,
    stats: &Stats,
    size: usize,
) -> Result<Vec<f32>> {
    if let Some(first) = images.first() {
        if images.iter().any(|im| im.resolution != first.resolution) {
            return Err(Error::Contract("calibration images with mixed resolutions".into()));
        }
    }
    let slices = images
        .iter()
        .map(|im| preprocess(im, background, stats, size))
        .collect::<Result<Vec<_>>>()?;
    let k = slices.len();
    let mut out = vec![0.0f32; size * size * 3 * k];
    for (j, slice) in slices.iter().enumerate() {
        for px in 0..size * size {
            out[px * 3 * k + 3 * j..px * 3 * k + 3 * j + 3].copy_from_slice(&slice[3 * px..3 * px + 3]);
        }
    }
    Ok(out)
}
