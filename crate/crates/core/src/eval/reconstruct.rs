use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::optics::{HeightMap, NormalMap};
use crate::{Error, Result};

const MIN_NZ: f64 = 0.1;

/// In-place 2D FFT of a row-major `n × n` buffer.
fn fft2(buf: &mut [Complex<f64>], n: usize, inverse: bool) {
    let mut planner = FftPlanner::new();
    let fft = if inverse { planner.plan_fft_inverse(n) } else { planner.plan_fft_forward(n) };
    for row in buf.chunks_mut(n) {
        fft.process(row);
    }
    let mut col = vec![Complex::default(); n];
    for c in 0..n {
        for r in 0..n {
            col[r] = buf[r * n + c];
        }
        fft.process(&mut col);
        for r in 0..n {
            buf[r * n + c] = col[r];
        }
    }
}

/// Even (half-sample) reflection of an `r × r` field to `2r × 2r`.
fn mirror(g: &[f64], r: usize) -> Vec<Complex<f64>> {
    let n = 2 * r;
    let mut out = vec![Complex::default(); n * n];
    for row in 0..n {
        for col in 0..n {
            let sr = if row < r { row } else { n - 1 - row };
            let sc = if col < r { col } else { n - 1 - col };
            out[row * n + col] = Complex::new(g[sr * r + sc], 0.0);
        }
    }
    out
}

/// Least-squares height from normals, solved in the frequency domain on a
/// mirror-padded grid (Frankot–Chellappa with a discrete derivative model,
/// which makes the padded problem consistent at the reflection seams).
/// Output is zero-mean, in millimeters for a grid spaced `pitch_mm` apart.
pub fn reconstruct_height(normals: &NormalMap, pitch_mm: f64) -> Result<HeightMap> {
    let r = normals.resolution;
    if normals.values.len() != r * r * 3 || r == 0 {
        return Err(Error::Contract(format!("normal map of {} values at {r}²", normals.values.len())));
    }
    if normals.values.iter().all(|v| *v == 0.0) {
        return Err(Error::config("all-zero normal field"));
    }
    if !(pitch_mm > 0.0) {
        return Err(Error::config(format!("pixel pitch {pitch_mm} must be positive")));
    }
    let mut gx = vec![0.0; r * r];
    let mut gy = vec![0.0; r * r];
    for (i, n) in normals.values.chunks_exact(3).enumerate() {
        let nz = n[2].max(MIN_NZ);
        gx[i] = -n[0] / nz * pitch_mm;
        gy[i] = -n[1] / nz * pitch_mm;
    }
    // Divergence of the half-pixel gradient field with zero flux across the border.
    let mut div = vec![0.0; r * r];
    for row in 0..r {
        for col in 0..r {
            let i = row * r + col;
            if col + 1 < r {
                let f = 0.5 * (gx[i] + gx[i + 1]);
                div[i] += f;
                div[i + 1] -= f;
            }
            if row + 1 < r {
                let f = 0.5 * (gy[i] + gy[i + r]);
                div[i] += f;
                div[i + r] -= f;
            }
        }
    }
    let n = 2 * r;
    let mut h = mirror(&div, r);
    fft2(&mut h, n, false);
    let eig = |k: usize| 2.0 * (std::f64::consts::PI * k as f64 / r as f64).cos() - 2.0;
    for v in 0..n {
        for u in 0..n {
            let denom = eig(u) + eig(v);
            let i = v * n + u;
            h[i] = if denom.abs() > 1e-12 { h[i] / denom } else { Complex::default() };
        }
    }
    fft2(&mut h, n, true);
    let scale = 1.0 / (n * n) as f64;
    let mut values: Vec<f64> = (0..r * r).map(|i| h[(i / r) * n + i % r].re * scale).collect();
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    values.iter_mut().for_each(|v| *v -= mean);
    Ok(HeightMap { resolution: r, pixel_pitch_mm: pitch_mm, values })
}
