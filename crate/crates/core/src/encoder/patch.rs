use numgrad::{permute_data, Scalar, Tape, Tensor, Var};

use crate::Result;

/// `[B, H, W, C]` → `[B, N, P·P·C]`, tokens row-major over the patch grid.
pub fn patchify<T: Scalar>(tape: &mut Tape<T>, x: Var, p: usize) -> Result<Var> {
    let d = tape.dims(x).to_vec();
    let (b, h, w, c) = (d[0], d[1], d[2], d[3]);
    let x = tape.reshape(x, &[b, h / p, p, w / p, p, c])?;
    let x = tape.permute(x, &[0, 1, 3, 2, 4, 5])?;
    Ok(tape.reshape(x, &[b, (h / p) * (w / p), p * p * c])?)
}

/// Inverse of [`patchify`]: `[B, N, P·P·C]` → `[B, g·P, g·P, C]`.
pub fn unpatchify<T: Scalar>(tape: &mut Tape<T>, x: Var, p: usize) -> Result<Var> {
    let d = tape.dims(x).to_vec();
    let (b, n, e) = (d[0], d[1], d[2]);
    let g = grid_side(n)?;
    let c = e / (p * p);
    if c * p * p != e {
        return Err(crate::Error::config(format!("token width {e} not divisible by {}", p * p)));
    }
    let x = tape.reshape(x, &[b, g, g, p, p, c])?;
    let x = tape.permute(x, &[0, 1, 3, 2, 4, 5])?;
    Ok(tape.reshape(x, &[b, g * p, g * p, c])?)
}

fn grid_side(n: usize) -> Result<usize> {
    let g = (n as f64).sqrt().round() as usize;
    if g * g != n {
        return Err(crate::Error::config(format!("{n} tokens do not form a square grid")));
    }
    Ok(g)
}

/// Tensor-level [`patchify`] without a tape.
pub fn patchify_tensor<T: Scalar>(x: &Tensor<T>, p: usize) -> Result<Tensor<T>> {
    let d = x.dims();
    let (b, h, w, c) = (d[0], d[1], d[2], d[3]);
    let (data, _) = permute_data(x.data(), &[b, h / p, p, w / p, p, c], &[0, 1, 3, 2, 4, 5])?;
    Ok(Tensor::new(vec![b, (h / p) * (w / p), p * p * c], data)?)
}

/// Tensor-level [`unpatchify`] without a tape.
pub fn unpatchify_tensor<T: Scalar>(x: &Tensor<T>, p: usize) -> Result<Tensor<T>> {
    let d = x.dims();
    let (b, n, e) = (d[0], d[1], d[2]);
    let g = grid_side(n)?;
    let c = e / (p * p);
    if c * p * p != e {
        return Err(crate::Error::config(format!("token width {e} not divisible by {}", p * p)));
    }
    let (data, _) = permute_data(x.data(), &[b, g, g, p, p, c], &[0, 1, 3, 2, 4, 5])?;
    Ok(Tensor::new(vec![b, g * p, g * p, c], data)?)
}

/// Fixed 2D sin-cos table `[g·g, D]`: first half encodes the row, second
/// half the column.
pub fn sincos_2d(grid: usize, dim: usize) -> Tensor<f32> {
    let quarter = dim / 4;
    let omega: Vec<f64> = (0..quarter).map(|i| 1.0 / 10000f64.powf(i as f64 / quarter as f64)).collect();
    let mut out = vec![0.0f32; grid * grid * dim];
    for r in 0..grid {
        for c in 0..grid {
            let row = &mut out[(r * grid + c) * dim..(r * grid + c + 1) * dim];
            for (half, pos) in [(0, r), (1, c)] {
                for (i, w) in omega.iter().enumerate() {
                    let a = pos as f64 * w;
                    row[half * 2 * quarter + i] = a.sin() as f32;
                    row[half * 2 * quarter + quarter + i] = a.cos() as f32;
                }
            }
        }
    }
    Tensor::new(vec![grid * grid, dim], out).expect("sized above")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn patch_roundtrip_bitwise() {
        let x = Tensor::from_fn(vec![2, 8, 8, 3], |i| (i as f32 * 0.37).sin());
        let p = patchify_tensor(&x, 4).unwrap();
        assert_eq!(p.dims(), &[2, 4, 48]);
        assert_eq!(unpatchify_tensor(&p, 4).unwrap(), x);
        let mut tape = Tape::<f32>::new();
        let v = tape.constant(x.clone());
        let t = patchify(&mut tape, v, 4).unwrap();
        assert_eq!(tape.value(t), &p);
        let u = unpatchify(&mut tape, t, 4).unwrap();
        assert_eq!(tape.value(u), &x);
    }

    #[test]
    fn first_patch_is_top_left_block() {
        let x = Tensor::from_fn(vec![1, 4, 4, 1], |i| i as f32);
        let p = patchify_tensor(&x, 2).unwrap();
        assert_eq!(&p.data()[..4], &[0.0, 1.0, 4.0, 5.0]);
    }

    #[test]
    fn sincos_rows_distinct_and_bounded() {
        let t = sincos_2d(4, 16);
        assert_eq!(t.dims(), &[16, 16]);
        assert!(t.data().iter().all(|v| v.abs() <= 1.0));
        assert_eq!(&t.data()[..16], &[0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0]);
        for a in 0..16 {
            for b in 0..a {
                assert_ne!(t.data()[a * 16..(a + 1) * 16], t.data()[b * 16..(b + 1) * 16]);
            }
        }
    }
}
