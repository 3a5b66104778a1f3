use super::axis_split;
use crate::tape::Op;
use crate::{Result, Scalar, Tape, Tensor, TensorError, Var};

impl<T: Scalar> Tape<T> {
    /// Sum of all entries; accumulated in 64-bit.
    pub fn sum(&mut self, x: Var) -> Var {
        let s: f64 = self.data(x).iter().map(|v| v.f64()).sum();
        self.push(Tensor::scalar(T::of(s)), Op::SumAll(x), &[x])
    }

    pub fn mean(&mut self, x: Var) -> Var {
        let n = self.data(x).len().max(1) as f64;
        let s: f64 = self.data(x).iter().map(|v| v.f64()).sum();
        self.push(Tensor::scalar(T::of(s / n)), Op::MeanAll(x), &[x])
    }

    /// Mean over one axis, which is removed from the output.
    pub fn mean_axis(&mut self, x: Var, axis: usize) -> Result<Var> {
        let d = self.dims(x).to_vec();
        if axis >= d.len() {
            return Err(TensorError::shape("mean_axis", &d, &[axis]));
        }
        let (outer, n, inner) = axis_split(&d, axis);
        let src = self.data(x);
        let mut out = vec![0f64; outer * inner];
        for o in 0..outer {
            for a in 0..n {
                let row = &src[(o * n + a) * inner..(o * n + a + 1) * inner];
                for (acc, v) in out[o * inner..(o + 1) * inner].iter_mut().zip(row) {
                    *acc += v.f64();
                }
            }
        }
        let mut dims = d;
        dims.remove(axis);
        let inv = 1.0 / n as f64;
        let value = Tensor::new(dims, out.into_iter().map(|v| T::of(v * inv)).collect())?;
        Ok(self.push(value, Op::MeanAxis(x, axis), &[x]))
    }

    /// Softmax along `axis`, stabilized by max subtraction.
    pub fn softmax(&mut self, x: Var, axis: usize) -> Result<Var> {
        let out = self.softmax_like(x, axis, false)?;
        Ok(self.push(out, Op::Softmax(x, axis), &[x]))
    }

    pub fn log_softmax(&mut self, x: Var, axis: usize) -> Result<Var> {
        let out = self.softmax_like(x, axis, true)?;
        Ok(self.push(out, Op::LogSoftmax(x, axis), &[x]))
    }

    fn softmax_like(&self, x: Var, axis: usize, log: bool) -> Result<Tensor<T>> {
        let d = self.dims(x).to_vec();
        if axis >= d.len() {
            return Err(TensorError::shape("softmax", &d, &[axis]));
        }
        let (outer, n, inner) = axis_split(&d, axis);
        let src = self.data(x);
        let mut out = vec![T::zero(); src.len()];
        for o in 0..outer {
            for i in 0..inner {
                let at = |a: usize| (o * n + a) * inner + i;
                let mut mx = T::neg_infinity();
                for a in 0..n {
                    mx = mx.max(src[at(a)]);
                }
                let mut sum = T::zero();
                for a in 0..n {
                    let e = (src[at(a)] - mx).exp();
                    out[at(a)] = e;
                    sum = sum + e;
                }
                if log {
                    let lse = sum.ln();
                    for a in 0..n {
                        out[at(a)] = src[at(a)] - mx - lse;
                    }
                } else {
                    let inv = T::one() / sum;
                    for a in 0..n {
                        out[at(a)] = out[at(a)] * inv;
                    }
                }
            }
        }
        Tensor::new(d, out)
    }
}
