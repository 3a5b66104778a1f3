//! Separable Gaussian blur and bilinear resize on channels-last planes.

pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    if sigma <= 1e-6 {
        return vec![1.0];
    }
    let radius = (3.0 * sigma).ceil() as i64;
    let mut k: Vec<f64> = (-radius..=radius)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let s: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= s);
    k
}

/// Blurs an `h×w×c` plane with clamp-to-edge borders. The kernel is
/// normalized, so the output never exceeds the input range.
pub fn gaussian_blur(data: &[f64], h: usize, w: usize, c: usize, sigma: f64) -> Vec<f64> {
    let k = gaussian_kernel(sigma);
    if k.len() == 1 {
        return data.to_vec();
    }
    let r = (k.len() / 2) as isize;
    let clamp = |v: isize, n: usize| v.clamp(0, n as isize - 1) as usize;
    let mut tmp = vec![0.0; data.len()];
    for y in 0..h {
        for x in 0..w {
            for ch in 0..c {
                let mut acc = 0.0;
                for (i, kv) in k.iter().enumerate() {
                    let xx = clamp(x as isize + i as isize - r, w);
                    acc += kv * data[(y * w + xx) * c + ch];
                }
                tmp[(y * w + x) * c + ch] = acc;
            }
        }
    }
    let mut out = vec![0.0; data.len()];
    for y in 0..h {
        for x in 0..w {
            for ch in 0..c {
                let mut acc = 0.0;
                for (i, kv) in k.iter().enumerate() {
                    let yy = clamp(y as isize + i as isize - r, h);
                    acc += kv * tmp[(yy * w + x) * c + ch];
                }
                out[(y * w + x) * c + ch] = acc;
            }
        }
    }
    out
}

pub fn gaussian_blur_f32(data: &[f32], h: usize, w: usize, c: usize, sigma: f64) -> Vec<f32> {
    if sigma <= 1e-6 {
        return data.to_vec();
    }
    let d: Vec<f64> = data.iter().map(|v| *v as f64).collect();
    gaussian_blur(&d, h, w, c, sigma).into_iter().map(|v| v as f32).collect()
}

/// Bilinear resize with pixel-center alignment.
pub fn resize_bilinear(data: &[f32], h: usize, w: usize, c: usize, oh: usize, ow: usize) -> Vec<f32> {
    if h == oh && w == ow {
        return data.to_vec();
    }
    let mut out = vec![0.0f32; oh * ow * c];
    let sy = h as f64 / oh as f64;
    let sx = w as f64 / ow as f64;
    for y in 0..oh {
        let fy = ((y as f64 + 0.5) * sy - 0.5).clamp(0.0, (h - 1) as f64);
        let y0 = fy.floor() as usize;
        let y1 = (y0 + 1).min(h - 1);
        let ty = fy - y0 as f64;
        for x in 0..ow {
            let fx = ((x as f64 + 0.5) * sx - 0.5).clamp(0.0, (w - 1) as f64);
            let x0 = fx.floor() as usize;
            let x1 = (x0 + 1).min(w - 1);
            let tx = fx - x0 as f64;
            for ch in 0..c {
                let p = |yy: usize, xx: usize| data[(yy * w + xx) * c + ch] as f64;
                let v = (1.0 - ty) * ((1.0 - tx) * p(y0, x0) + tx * p(y0, x1))
                    + ty * ((1.0 - tx) * p(y1, x0) + tx * p(y1, x1));
                out[(y * ow + x) * c + ch] = v as f32;
            }
        }
    }
    out
}
