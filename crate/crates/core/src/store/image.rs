//! 8-bit PNG storage of tactile images and previews.

use std::io::Cursor;
use std::path::Path;

use crate::error::IoContext;
use crate::optics::TactileImage;
use crate::{Error, Result};

fn png_error(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Format { kind: "PNG", path: path.to_path_buf(), detail: e.to_string() }
}

/// Quantizes `v ∈ [0, 1]` to a byte.
pub fn to_u8(v: f32) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

fn encode(path: &Path, width: usize, height: usize, color: png::ColorType, bytes: &[u8]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    let mut enc = png::Encoder::new(&mut out, width as u32, height as u32);
    enc.set_color(color);
    enc.set_depth(png::BitDepth::Eight);
    let mut writer = enc.write_header().map_err(|e| png_error(path, e))?;
    writer.write_image_data(bytes).map_err(|e| png_error(path, e))?;
    writer.finish().map_err(|e| png_error(path, e))?;
    Ok(out)
}

pub fn write_rgb(path: &Path, width: usize, height: usize, bytes: &[u8]) -> Result<()> {
    let data = encode(path, width, height, png::ColorType::Rgb, bytes)?;
    std::fs::write(path, data).at(path)
}

pub fn write_gray(path: &Path, width: usize, height: usize, bytes: &[u8]) -> Result<()> {
    let data = encode(path, width, height, png::ColorType::Grayscale, bytes)?;
    std::fs::write(path, data).at(path)
}

/// Decodes an 8-bit RGB PNG to `(width, height, bytes)`.
pub fn read_rgb(path: &Path) -> Result<(usize, usize, Vec<u8>)> {
    let bytes = std::fs::read(path).at(path)?;
    let mut reader = png::Decoder::new(Cursor::new(bytes)).read_info().map_err(|e| png_error(path, e))?;
    let size = reader.output_buffer_size().ok_or_else(|| png_error(path, "image too large"))?;
    let mut buf = vec![0; size];
    let info = reader.next_frame(&mut buf).map_err(|e| png_error(path, e))?;
    if info.color_type != png::ColorType::Rgb || info.bit_depth != png::BitDepth::Eight {
        return Err(png_error(path, format!("expected 8-bit RGB, found {:?}", info.color_type)));
    }
    buf.truncate(info.buffer_size());
    Ok((info.width as usize, info.height as usize, buf))
}

pub fn write_image(path: &Path, img: &TactileImage) -> Result<()> {
    let bytes: Vec<u8> = img.values.iter().map(|&v| to_u8(v)).collect();
    write_rgb(path, img.resolution, img.resolution, &bytes)
}

pub fn read_image(path: &Path) -> Result<TactileImage> {
    let (w, h, bytes) = read_rgb(path)?;
    if w != h {
        return Err(png_error(path, format!("tactile images are square, found {w}×{h}")));
    }
    Ok(TactileImage::new(w, bytes.iter().map(|&b| b as f32 / 255.0).collect()))
}

/// Background-subtracted signal in [−1, 1] mapped to bytes via `(s + 1) / 2`.
pub fn write_signal(path: &Path, signal: &TactileImage) -> Result<()> {
    let bytes: Vec<u8> = signal.values.iter().map(|&s| to_u8((s + 1.0) / 2.0)).collect();
    write_rgb(path, signal.resolution, signal.resolution, &bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantized_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.png");
        let img = TactileImage::new(2, (0..12).map(|i| i as f32 / 11.0).collect());
        write_image(&p, &img).unwrap();
        let back = read_image(&p).unwrap();
        for (a, b) in img.values.iter().zip(&back.values) {
            assert!((a - b).abs() <= 0.5 / 255.0 + 1e-6);
        }
        write_image(&p, &back).unwrap();
        assert_eq!(read_image(&p).unwrap(), back);
    }

    #[test]
    fn zero_signal_is_mid_gray() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.png");
        write_signal(&p, &TactileImage::new(3, vec![0.0; 27])).unwrap();
        assert!(read_rgb(&p).unwrap().2.iter().all(|&b| b == 128));
    }
}
