use crate::scalar::{gemm, MatRef};
use crate::tape::Op;
use crate::{Result, Scalar, Tape, Tensor, TensorError, Var};

/// Geometry of a channels-last 2-D convolution.
#[derive(Clone, Copy, Debug)]
pub(crate) struct ConvGeom {
    pub batch: usize,
    pub h: usize,
    pub w: usize,
    pub c: usize,
    pub kh: usize,
    pub kw: usize,
    pub o: usize,
    pub stride: usize,
    pub pad: usize,
    pub oh: usize,
    pub ow: usize,
}

impl ConvGeom {
    fn patch(&self) -> usize {
        self.kh * self.kw * self.c
    }
}

fn im2col<T: Scalar>(x: &[T], g: &ConvGeom) -> Vec<T> {
    let patch = g.patch();
    let mut cols = vec![T::zero(); g.batch * g.oh * g.ow * patch];
    for b in 0..g.batch {
        for oy in 0..g.oh {
            for ox in 0..g.ow {
                let row = ((b * g.oh + oy) * g.ow + ox) * patch;
                for ky in 0..g.kh {
                    let iy = (oy * g.stride + ky) as isize - g.pad as isize;
                    if iy < 0 || iy >= g.h as isize {
                        continue;
                    }
                    for kx in 0..g.kw {
                        let ix = (ox * g.stride + kx) as isize - g.pad as isize;
                        if ix < 0 || ix >= g.w as isize {
                            continue;
                        }
                        let src = ((b * g.h + iy as usize) * g.w + ix as usize) * g.c;
                        let dst = row + (ky * g.kw + kx) * g.c;
                        cols[dst..dst + g.c].copy_from_slice(&x[src..src + g.c]);
                    }
                }
            }
        }
    }
    cols
}

/// Scatter-adds column gradients back onto the input image.
pub(crate) fn col2im<T: Scalar>(dcols: &[T], g: &ConvGeom, dx: &mut [T]) {
    let patch = g.patch();
    for b in 0..g.batch {
        for oy in 0..g.oh {
            for ox in 0..g.ow {
                let row = ((b * g.oh + oy) * g.ow + ox) * patch;
                for ky in 0..g.kh {
                    let iy = (oy * g.stride + ky) as isize - g.pad as isize;
                    if iy < 0 || iy >= g.h as isize {
                        continue;
                    }
                    for kx in 0..g.kw {
                        let ix = (ox * g.stride + kx) as isize - g.pad as isize;
                        if ix < 0 || ix >= g.w as isize {
                            continue;
                        }
                        let dst = ((b * g.h + iy as usize) * g.w + ix as usize) * g.c;
                        let src = row + (ky * g.kw + kx) * g.c;
                        for c in 0..g.c {
                            dx[dst + c] = dx[dst + c] + dcols[src + c];
                        }
                    }
                }
            }
        }
    }
}

impl<T: Scalar> Tape<T> {
    /// Channels-last convolution: `x[B,H,W,C]`, `w[kh,kw,C,O]`, `b[O]` → `[B,OH,OW,O]`.
    pub fn conv2d(&mut self, x: Var, w: Var, b: Var, stride: usize, pad: usize) -> Result<Var> {
        let (xd, wd) = (self.dims(x).to_vec(), self.dims(w).to_vec());
        if xd.len() != 4 || wd.len() != 4 || wd[2] != xd[3] || self.dims(b) != [wd[3]] || stride == 0 {
            return Err(TensorError::shape("conv2d", &xd, &wd));
        }
        let (h, wdt) = (xd[1] + 2 * pad, xd[2] + 2 * pad);
        if h < wd[0] || wdt < wd[1] {
            return Err(TensorError::shape("conv2d", &xd, &wd));
        }
        let geom = ConvGeom {
            batch: xd[0],
            h: xd[1],
            w: xd[2],
            c: xd[3],
            kh: wd[0],
            kw: wd[1],
            o: wd[3],
            stride,
            pad,
            oh: (h - wd[0]) / stride + 1,
            ow: (wdt - wd[1]) / stride + 1,
        };
        let cols = im2col(self.data(x), &geom);
        let rows = geom.batch * geom.oh * geom.ow;
        let mut out = vec![T::zero(); rows * geom.o];
        for r in out.chunks_mut(geom.o) {
            r.copy_from_slice(self.data(b));
        }
        gemm(
            MatRef::new(&cols, rows, geom.patch()),
            MatRef::new(self.data(w), geom.patch(), geom.o),
            T::one(),
            &mut out,
        );
        let value = Tensor::new(vec![geom.batch, geom.oh, geom.ow, geom.o], out)?;
        Ok(self.push(value, Op::Conv2d { x, w, b, geom, cols }, &[x, w, b]))
    }
}
