use crate::tape::Op;
use crate::{Result, Scalar, Tape, Tensor, TensorError, Var};

impl<T: Scalar> Tape<T> {
    /// Normalizes the last axis to zero mean and unit variance, then applies
    /// `gamma`/`beta`. A constant row maps to `beta`.
    pub fn layernorm(&mut self, x: Var, gamma: Var, beta: Var, eps: f64) -> Result<Var> {
        let d = self.dims(x).to_vec();
        let width = *d.last().ok_or_else(|| TensorError::shape("layernorm", &d, &[]))?;
        if self.dims(gamma) != [width] || self.dims(beta) != [width] {
            return Err(TensorError::shape("layernorm", &d, self.dims(gamma)));
        }
        let src = self.data(x);
        let (g, b) = (self.data(gamma), self.data(beta));
        let rows = src.len() / width.max(1);
        let mut xhat = vec![T::zero(); src.len()];
        let mut rstd = vec![T::zero(); rows];
        let mut out = vec![T::zero(); src.len()];
        for r in 0..rows {
            let row = &src[r * width..(r + 1) * width];
            let mean = row.iter().map(|v| v.f64()).sum::<f64>() / width as f64;
            let var = row.iter().map(|v| (v.f64() - mean).powi(2)).sum::<f64>() / width as f64;
            let rs = 1.0 / (var + eps).sqrt();
            rstd[r] = T::of(rs);
            for j in 0..width {
                let h = T::of((row[j].f64() - mean) * rs);
                xhat[r * width + j] = h;
                out[r * width + j] = h * g[j] + b[j];
            }
        }
        let value = Tensor::new(d, out)?;
        Ok(self.push(
            value,
            Op::LayerNorm {
                x,
                gamma,
                beta,
                xhat,
                rstd,
            },
            &[x, gamma, beta],
        ))
    }

    /// `x / (‖x‖ + eps)` along the last axis.
    pub fn l2_normalize(&mut self, x: Var, eps: f64) -> Result<Var> {
        let d = self.dims(x).to_vec();
        let width = *d.last().ok_or_else(|| TensorError::shape("l2_normalize", &d, &[]))?;
        let src = self.data(x);
        let rows = src.len() / width.max(1);
        let mut norms = Vec::with_capacity(rows);
        let mut out = vec![T::zero(); src.len()];
        for r in 0..rows {
            let row = &src[r * width..(r + 1) * width];
            let s = row.iter().map(|v| v.f64() * v.f64()).sum::<f64>().sqrt();
            let inv = T::of(1.0 / (s + eps));
            norms.push(T::of(s));
            for j in 0..width {
                out[r * width + j] = row[j] * inv;
            }
        }
        let value = Tensor::new(d, out)?;
        Ok(self.push(
            value,
            Op::L2Normalize {
                x,
                norms,
                eps: T::of(eps),
            },
            &[x],
        ))
    }
}
