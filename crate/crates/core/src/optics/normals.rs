use super::scene::HeightMap;

/// Per-pixel unit surface normals, `resolution × resolution × 3`, channels (x, y, z).
#[derive(Clone, Debug, PartialEq)]
pub struct NormalMap {
    pub resolution: usize,
    pub values: Vec<f64>,
}

impl NormalMap {
    pub fn flat(resolution: usize) -> Self {
        let mut values = vec![0.0; resolution * resolution * 3];
        for px in values.chunks_mut(3) {
            px[2] = 1.0;
        }
        NormalMap { resolution, values }
    }

    pub fn at(&self, row: usize, col: usize) -> [f64; 3] {
        let i = (row * self.resolution + col) * 3;
        [self.values[i], self.values[i + 1], self.values[i + 2]]
    }

    pub fn to_f32(&self) -> Vec<f32> {
        self.values.iter().map(|v| *v as f32).collect()
    }
}

/// `n ∝ (−∂h/∂x, −∂h/∂y, 1)` from central differences in millimeters,
/// one-sided at the borders. x runs along columns, y along rows.
pub fn normal_from_height(h: &HeightMap) -> NormalMap {
    let r = h.resolution;
    let p = h.pixel_pitch_mm;
    let v = &h.values;
    let diff = |i: usize, get: &dyn Fn(usize) -> f64| -> f64 {
        let (a, b) = (i.saturating_sub(1), (i + 1).min(r - 1));
        (get(b) - get(a)) / ((b - a).max(1) as f64 * p)
    };
    let mut values = vec![0.0; r * r * 3];
    for row in 0..r {
        for col in 0..r {
            let gx = diff(col, &|c| v[row * r + c]);
            let gy = diff(row, &|q| v[q * r + col]);
            let (nx, ny, nz) = (-gx, -gy, 1.0);
            let n = (nx * nx + ny * ny + nz * nz).sqrt();
            let i = (row * r + col) * 3;
            values[i] = nx / n;
            values[i + 1] = ny / n;
            values[i + 2] = nz / n;
        }
    }
    NormalMap { resolution: r, values }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optics::{pixel_center_mm, pixel_pitch_mm};

    #[test]
    fn flat_map_points_up() {
        let n = normal_from_height(&HeightMap::zeros(8));
        assert_eq!(n, NormalMap::flat(8));
    }

    #[test]
    fn unit_slope_plane() {
        let r = 16;
        let mut h = HeightMap::zeros(r);
        for row in 0..r {
            for col in 0..r {
                h.values[row * r + col] = pixel_center_mm(row, col, r).0;
            }
        }
        let n = normal_from_height(&h);
        let s = 0.5f64.sqrt();
        for row in 1..r - 1 {
            for col in 1..r - 1 {
                let [x, y, z] = n.at(row, col);
                assert!((x + s).abs() < 1e-12 && y.abs() < 1e-12 && (z - s).abs() < 1e-12);
            }
        }
        assert!(pixel_pitch_mm(r) > 0.0);
    }
}
