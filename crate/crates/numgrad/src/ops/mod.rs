mod conv;
mod elementwise;
mod linalg;
mod norm;
mod reduce;
mod shape;

pub(crate) use conv::{col2im, ConvGeom};
pub(crate) use elementwise::gelu_grad;

/// Splits `dims` around `axis` into (outer, axis extent, inner) counts.
pub(crate) fn axis_split(dims: &[usize], axis: usize) -> (usize, usize, usize) {
    let outer = dims[..axis].iter().product();
    let inner = dims[axis + 1..].iter().product();
    (outer, dims[axis], inner)
}

pub(crate) use linalg::{
    matmul_grad_a as linalg_grad_a, matmul_grad_b as linalg_grad_b, plan as matmul_plan,
    MatMulPlan,
};
