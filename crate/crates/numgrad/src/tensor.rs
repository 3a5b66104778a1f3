use crate::{Result, Scalar, TensorError};

/// Dense row-major tensor value.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor<T = f32> {
    dims: Vec<usize>,
    data: Vec<T>,
}

impl<T: Scalar> Tensor<T> {
    pub fn new(dims: impl Into<Vec<usize>>, data: Vec<T>) -> Result<Self> {
        let dims = dims.into();
        let n: usize = dims.iter().product();
        if n != data.len() {
            return Err(TensorError::shape("tensor", &dims, &[data.len()]));
        }
        Ok(Tensor { dims, data })
    }

    pub fn zeros(dims: impl Into<Vec<usize>>) -> Self {
        Self::full(dims, T::zero())
    }

    pub fn ones(dims: impl Into<Vec<usize>>) -> Self {
        Self::full(dims, T::one())
    }

    pub fn full(dims: impl Into<Vec<usize>>, v: T) -> Self {
        let dims = dims.into();
        let n = dims.iter().product();
        Tensor {
            dims,
            data: vec![v; n],
        }
    }

    pub fn scalar(v: T) -> Self {
        Tensor {
            dims: vec![],
            data: vec![v],
        }
    }

    pub fn from_fn(dims: impl Into<Vec<usize>>, mut f: impl FnMut(usize) -> T) -> Self {
        let dims = dims.into();
        let n = dims.iter().product();
        Tensor {
            dims,
            data: (0..n).map(&mut f).collect(),
        }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn ndim(&self) -> usize {
        self.dims.len()
    }

    pub fn reshape(mut self, dims: impl Into<Vec<usize>>) -> Result<Self> {
        let dims = dims.into();
        if dims.iter().product::<usize>() != self.data.len() {
            return Err(TensorError::shape("reshape", &self.dims, &dims));
        }
        self.dims = dims;
        Ok(self)
    }

    pub fn permute(&self, perm: &[usize]) -> Result<Self> {
        let (data, dims) = permute_data(&self.data, &self.dims, perm)?;
        Ok(Tensor { dims, data })
    }

    pub fn cast<U: Scalar>(&self) -> Tensor<U> {
        Tensor {
            dims: self.dims.clone(),
            data: self.data.iter().map(|v| U::of(v.f64())).collect(),
        }
    }

    pub fn item(&self) -> T {
        self.data[0]
    }
}

/// Reorders axes so that output axis `i` is input axis `perm[i]`.
pub fn permute_data<T: Copy>(
    data: &[T],
    dims: &[usize],
    perm: &[usize],
) -> Result<(Vec<T>, Vec<usize>)> {
    let mut seen = vec![false; dims.len()];
    if perm.len() != dims.len() || perm.iter().any(|&p| p >= dims.len()) {
        return Err(TensorError::shape("permute", dims, perm));
    }
    for &p in perm {
        if seen[p] {
            return Err(TensorError::shape("permute", dims, perm));
        }
        seen[p] = true;
    }
    let nd = dims.len();
    let out_dims: Vec<usize> = perm.iter().map(|&p| dims[p]).collect();
    let mut in_strides = vec![1usize; nd];
    for i in (0..nd.saturating_sub(1)).rev() {
        in_strides[i] = in_strides[i + 1] * dims[i + 1];
    }
    let strides: Vec<usize> = perm.iter().map(|&p| in_strides[p]).collect();
    let total = data.len();
    let mut out = Vec::with_capacity(total);
    if total == 0 {
        return Ok((out, out_dims));
    }
    if nd == 0 {
        out.push(data[0]);
        return Ok((out, out_dims));
    }
    // Innermost output axis is copied in a tight loop.
    let last = nd - 1;
    let inner_len = out_dims[last];
    let inner_stride = strides[last];
    let mut idx = vec![0usize; last];
    let mut base = 0usize;
    loop {
        let mut off = base;
        for _ in 0..inner_len {
            out.push(data[off]);
            off += inner_stride;
        }
        // advance the outer counter
        let mut ax = last;
        loop {
            if ax == 0 {
                return Ok((out, out_dims));
            }
            ax -= 1;
            idx[ax] += 1;
            base += strides[ax];
            if idx[ax] < out_dims[ax] {
                break;
            }
            base -= strides[ax] * out_dims[ax];
            idx[ax] = 0;
        }
    }
}

pub(crate) fn inverse_perm(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; perm.len()];
    for (i, &p) in perm.iter().enumerate() {
        inv[p] = i;
    }
    inv
}
