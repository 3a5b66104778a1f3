use crate::scalar::{gemm, MatRef};
use crate::tape::Op;
use crate::{Result, Scalar, Tape, Tensor, TensorError, Var};

/// Resolved extents of a (possibly batched) matrix product.
#[derive(Clone, Copy, Debug)]
pub(crate) struct MatMulPlan {
    /// number of independent products; 0 means `b` is shared (2-D)
    pub batch: usize,
    pub m: usize,
    pub k: usize,
    pub n: usize,
}

pub(crate) fn plan(a: &[usize], b: &[usize], trans_b: bool) -> Result<(MatMulPlan, Vec<usize>)> {
    let err = || TensorError::shape("matmul", a, b);
    if a.len() < 2 || b.len() < 2 {
        return Err(err());
    }
    let (m, k) = (a[a.len() - 2], a[a.len() - 1]);
    let (bk, n) = if trans_b {
        (b[b.len() - 1], b[b.len() - 2])
    } else {
        (b[b.len() - 2], b[b.len() - 1])
    };
    if k != bk {
        return Err(err());
    }
    let mut out = a[..a.len() - 1].to_vec();
    out.push(n);
    if b.len() == 2 {
        let rows = a[..a.len() - 1].iter().product();
        return Ok((
            MatMulPlan {
                batch: 0,
                m: rows,
                k,
                n,
            },
            out,
        ));
    }
    if a.len() != b.len() || a[..a.len() - 2] != b[..b.len() - 2] {
        return Err(err());
    }
    let batch = a[..a.len() - 2].iter().product();
    Ok((MatMulPlan { batch, m, k, n }, out))
}

impl<T: Scalar> Tape<T> {
    /// `a[.., m, k] @ b[.., k, n]`; a 2-D `b` is shared across all leading axes of `a`.
    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.matmul_impl(a, b, false)
    }

    /// `a[.., m, k] @ b[.., n, k]ᵀ`.
    pub fn matmul_nt(&mut self, a: Var, b: Var) -> Result<Var> {
        self.matmul_impl(a, b, true)
    }

    fn matmul_impl(&mut self, a: Var, b: Var, trans_b: bool) -> Result<Var> {
        let (p, out_dims) = plan(self.dims(a), self.dims(b), trans_b)?;
        let out = matmul_forward(self.data(a), self.data(b), p, trans_b);
        let value = Tensor::new(out_dims, out)?;
        Ok(self.push(value, Op::MatMul { a, b, trans_b }, &[a, b]))
    }
}

fn b_ref<T>(b: &[T], p: MatMulPlan, trans_b: bool) -> MatRef<'_, T> {
    if trans_b {
        MatRef::new(b, p.n, p.k).t()
    } else {
        MatRef::new(b, p.k, p.n)
    }
}

pub(crate) fn matmul_forward<T: Scalar>(a: &[T], b: &[T], p: MatMulPlan, trans_b: bool) -> Vec<T> {
    let MatMulPlan { batch, m, k, n } = p;
    if batch == 0 {
        let mut out = vec![T::zero(); m * n];
        gemm(MatRef::new(a, m, k), b_ref(b, p, trans_b), T::zero(), &mut out);
        return out;
    }
    let mut out = vec![T::zero(); batch * m * n];
    for i in 0..batch {
        gemm(
            MatRef::new(&a[i * m * k..(i + 1) * m * k], m, k),
            b_ref(&b[i * k * n..(i + 1) * k * n], p, trans_b),
            T::zero(),
            &mut out[i * m * n..(i + 1) * m * n],
        );
    }
    out
}

/// Accumulates `dA += dC · Bᵀ`.
pub(crate) fn matmul_grad_a<T: Scalar>(
    g: &[T],
    b: &[T],
    p: MatMulPlan,
    trans_b: bool,
    da: &mut [T],
) {
    let MatMulPlan { batch, m, k, n } = p;
    let run = |g: &[T], b: &[T], da: &mut [T]| {
        gemm(MatRef::new(g, m, n), b_ref(b, p, trans_b).t(), T::one(), da);
    };
    if batch == 0 {
        run(g, b, da);
    } else {
        for i in 0..batch {
            run(
                &g[i * m * n..(i + 1) * m * n],
                &b[i * k * n..(i + 1) * k * n],
                &mut da[i * m * k..(i + 1) * m * k],
            );
        }
    }
}

/// Accumulates `dB += Aᵀ · dC` (or its transpose when `b` was read transposed).
pub(crate) fn matmul_grad_b<T: Scalar>(
    g: &[T],
    a: &[T],
    p: MatMulPlan,
    trans_b: bool,
    db: &mut [T],
) {
    let MatMulPlan { batch, m, k, n } = p;
    let run = |g: &[T], a: &[T], db: &mut [T]| {
        if trans_b {
            gemm(MatRef::new(g, m, n).t(), MatRef::new(a, m, k), T::one(), db);
        } else {
            gemm(MatRef::new(a, m, k).t(), MatRef::new(g, m, n), T::one(), db);
        }
    };
    if batch == 0 {
        run(g, a, db);
    } else {
        for i in 0..batch {
            run(
                &g[i * m * n..(i + 1) * m * n],
                &a[i * m * k..(i + 1) * m * k],
                &mut db[i * k * n..(i + 1) * k * n],
            );
        }
    }
}
