use super::axis_split;
use crate::tape::Op;
use crate::{permute_data, Result, Scalar, Tape, Tensor, TensorError, Var};

impl<T: Scalar> Tape<T> {
    pub fn reshape(&mut self, x: Var, dims: &[usize]) -> Result<Var> {
        let value = self.value(x).clone().reshape(dims.to_vec())?;
        Ok(self.push(value, Op::Reshape(x), &[x]))
    }

    /// Output axis `i` is input axis `perm[i]`.
    pub fn permute(&mut self, x: Var, perm: &[usize]) -> Result<Var> {
        let (data, dims) = permute_data(self.data(x), self.dims(x), perm)?;
        let value = Tensor::new(dims, data)?;
        Ok(self.push(value, Op::Permute(x, perm.to_vec()), &[x]))
    }

    pub fn concat(&mut self, xs: &[Var], axis: usize) -> Result<Var> {
        let first = self.dims(xs[0]).to_vec();
        if axis >= first.len() {
            return Err(TensorError::shape("concat", &first, &[axis]));
        }
        let mut total = 0;
        for &v in xs {
            let d = self.dims(v);
            if d.len() != first.len()
                || d[..axis] != first[..axis]
                || d[axis + 1..] != first[axis + 1..]
            {
                return Err(TensorError::shape("concat", &first, d));
            }
            total += d[axis];
        }
        let mut dims = first.clone();
        dims[axis] = total;
        let (outer, _, inner) = axis_split(&first, axis);
        let mut out = Vec::with_capacity(dims.iter().product());
        for o in 0..outer {
            for &v in xs {
                let chunk = self.dims(v)[axis] * inner;
                out.extend_from_slice(&self.data(v)[o * chunk..(o + 1) * chunk]);
            }
        }
        let value = Tensor::new(dims, out)?;
        Ok(self.push(value, Op::Concat(xs.to_vec(), axis), xs))
    }

    /// Takes `len` entries starting at `start` along `axis`.
    pub fn slice(&mut self, x: Var, axis: usize, start: usize, len: usize) -> Result<Var> {
        let d = self.dims(x).to_vec();
        if axis >= d.len() || start + len > d[axis] {
            return Err(TensorError::shape("slice", &d, &[axis, start, len]));
        }
        let (outer, n, inner) = axis_split(&d, axis);
        let src = self.data(x);
        let mut out = Vec::with_capacity(outer * len * inner);
        for o in 0..outer {
            let base = o * n * inner + start * inner;
            out.extend_from_slice(&src[base..base + len * inner]);
        }
        let mut dims = d;
        dims[axis] = len;
        let value = Tensor::new(dims, out)?;
        Ok(self.push(value, Op::Slice { x, axis, start }, &[x]))
    }
}
