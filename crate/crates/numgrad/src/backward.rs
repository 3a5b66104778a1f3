use crate::ops::{axis_split, col2im, gelu_grad};
use crate::scalar::{gemm, MatRef};
use crate::tape::{accumulate, Node, Op, Var};
use crate::tensor::inverse_perm;
use crate::{ops, permute_data, Scalar};

/// Adds `f(j)` for every output index `j` into `v`'s gradient, folding
/// cyclically when `v` was broadcast.
fn acc_map<T: Scalar>(
    nodes: &[Node<T>],
    grads: &mut [Option<Vec<T>>],
    v: Var,
    out_len: usize,
    f: impl Fn(usize) -> T,
) {
    accumulate(nodes, grads, v, |slot| {
        let n = slot.len();
        if n == out_len {
            for (j, s) in slot.iter_mut().enumerate() {
                *s = *s + f(j);
            }
        } else {
            for j in 0..out_len {
                slot[j % n] = slot[j % n] + f(j);
            }
        }
    });
}

pub(crate) fn propagate<T: Scalar>(
    nodes: &[Node<T>],
    grads: &mut [Option<Vec<T>>],
    i: usize,
    g: &[T],
) {
    let node = &nodes[i];
    let y = node.value.data();
    let val = |v: Var| nodes[v.0].value.data();
    let n = g.len();
    match &node.op {
        Op::Leaf => {}
        Op::Add(a, b) => {
            acc_map(nodes, grads, *a, n, |j| g[j]);
            acc_map(nodes, grads, *b, n, |j| g[j]);
        }
        Op::Sub(a, b) => {
            acc_map(nodes, grads, *a, n, |j| g[j]);
            acc_map(nodes, grads, *b, n, |j| -g[j]);
        }
        Op::Mul(a, b) => {
            let (xa, xb) = (val(*a), val(*b));
            let (la, lb) = (xa.len(), xb.len());
            acc_map(nodes, grads, *a, n, |j| g[j] * xb[j % lb]);
            acc_map(nodes, grads, *b, n, |j| g[j] * xa[j % la]);
        }
        Op::Scale(x, s) => acc_map(nodes, grads, *x, n, |j| g[j] * *s),
        Op::AddScalar(x) | Op::Reshape(x) => acc_map(nodes, grads, *x, n, |j| g[j]),
        Op::Gelu(x) => {
            let xv = val(*x);
            acc_map(nodes, grads, *x, n, |j| g[j] * gelu_grad(xv[j]));
        }
        Op::Relu(x) => {
            let xv = val(*x);
            acc_map(nodes, grads, *x, n, |j| {
                if xv[j] > T::zero() {
                    g[j]
                } else {
                    T::zero()
                }
            });
        }
        Op::Exp(x) => acc_map(nodes, grads, *x, n, |j| g[j] * y[j]),
        Op::Log(x) => {
            let xv = val(*x);
            acc_map(nodes, grads, *x, n, |j| g[j] / xv[j]);
        }
        Op::Sqrt(x) => acc_map(nodes, grads, *x, n, |j| g[j] / (T::of(2.0) * y[j])),
        Op::MatMul { a, b, trans_b } => {
            let (p, _) =
                ops_plan(nodes[a.0].value.dims(), nodes[b.0].value.dims(), *trans_b);
            let (xa, xb) = (val(*a), val(*b));
            accumulate(nodes, grads, *a, |da| {
                ops::linalg_grad_a(g, xb, p, *trans_b, da)
            });
            accumulate(nodes, grads, *b, |db| {
                ops::linalg_grad_b(g, xa, p, *trans_b, db)
            });
        }
        Op::Permute(x, perm) => {
            let (gp, _) = permute_data(g, node.value.dims(), &inverse_perm(perm)).unwrap();
            acc_map(nodes, grads, *x, n, |j| gp[j]);
        }
        Op::Concat(xs, axis) => {
            let dims = node.value.dims();
            let (outer, _, inner) = axis_split(dims, *axis);
            let mut offset = 0;
            for &v in xs {
                let ext = nodes[v.0].value.dims()[*axis];
                let chunk = ext * inner;
                let total = dims[*axis] * inner;
                accumulate(nodes, grads, v, |slot| {
                    for o in 0..outer {
                        let src = &g[o * total + offset..o * total + offset + chunk];
                        for (s, &q) in slot[o * chunk..(o + 1) * chunk].iter_mut().zip(src) {
                            *s = *s + q;
                        }
                    }
                });
                offset += chunk;
            }
        }
        Op::Slice { x, axis, start } => {
            let xd = nodes[x.0].value.dims();
            let (outer, ext, inner) = axis_split(xd, *axis);
            let len = node.value.dims()[*axis];
            accumulate(nodes, grads, *x, |slot| {
                for o in 0..outer {
                    let base = o * ext * inner + start * inner;
                    let src = &g[o * len * inner..(o + 1) * len * inner];
                    for (s, &q) in slot[base..base + len * inner].iter_mut().zip(src) {
                        *s = *s + q;
                    }
                }
            });
        }
        Op::Softmax(x, axis) | Op::LogSoftmax(x, axis) => {
            let is_log = matches!(node.op, Op::LogSoftmax(..));
            let (outer, len, inner) = axis_split(node.value.dims(), *axis);
            accumulate(nodes, grads, *x, |slot| {
                for o in 0..outer {
                    for k in 0..inner {
                        let at = |a: usize| (o * len + a) * inner + k;
                        if is_log {
                            let mut gs = T::zero();
                            for a in 0..len {
                                gs = gs + g[at(a)];
                            }
                            for a in 0..len {
                                slot[at(a)] = slot[at(a)] + g[at(a)] - y[at(a)].exp() * gs;
                            }
                        } else {
                            let mut dot = T::zero();
                            for a in 0..len {
                                dot = dot + g[at(a)] * y[at(a)];
                            }
                            for a in 0..len {
                                slot[at(a)] = slot[at(a)] + y[at(a)] * (g[at(a)] - dot);
                            }
                        }
                    }
                }
            });
        }
        Op::LayerNorm {
            x,
            gamma,
            beta,
            xhat,
            rstd,
        } => {
            let width = nodes[gamma.0].value.len();
            let gm = val(*gamma);
            let rows = n / width.max(1);
            accumulate(nodes, grads, *gamma, |slot| {
                for r in 0..rows {
                    for j in 0..width {
                        slot[j] = slot[j] + g[r * width + j] * xhat[r * width + j];
                    }
                }
            });
            accumulate(nodes, grads, *beta, |slot| {
                for r in 0..rows {
                    for j in 0..width {
                        slot[j] = slot[j] + g[r * width + j];
                    }
                }
            });
            accumulate(nodes, grads, *x, |slot| {
                let inv_w = T::one() / T::of(width as f64);
                for r in 0..rows {
                    let (gr, hr) = (&g[r * width..(r + 1) * width], &xhat[r * width..(r + 1) * width]);
                    let mut m1 = T::zero();
                    let mut m2 = T::zero();
                    for j in 0..width {
                        let dh = gr[j] * gm[j];
                        m1 = m1 + dh;
                        m2 = m2 + dh * hr[j];
                    }
                    m1 = m1 * inv_w;
                    m2 = m2 * inv_w;
                    for j in 0..width {
                        let dh = gr[j] * gm[j];
                        slot[r * width + j] = slot[r * width + j] + rstd[r] * (dh - m1 - hr[j] * m2);
                    }
                }
            });
        }
        Op::SumAll(x) => {
            let g0 = g[0];
            acc_map(nodes, grads, *x, nodes[x.0].value.len(), |_| g0);
        }
        Op::MeanAll(x) => {
            let len = nodes[x.0].value.len();
            let g0 = g[0] / T::of(len.max(1) as f64);
            acc_map(nodes, grads, *x, len, |_| g0);
        }
        Op::MeanAxis(x, axis) => {
            let (outer, len, inner) = axis_split(nodes[x.0].value.dims(), *axis);
            let inv = T::one() / T::of(len as f64);
            accumulate(nodes, grads, *x, |slot| {
                for o in 0..outer {
                    for a in 0..len {
                        for k in 0..inner {
                            let s = &mut slot[(o * len + a) * inner + k];
                            *s = *s + g[o * inner + k] * inv;
                        }
                    }
                }
            });
        }
        Op::L2Normalize { x, norms, eps } => {
            let xv = val(*x);
            let width = node.value.dims().last().copied().unwrap_or(1).max(1);
            accumulate(nodes, grads, *x, |slot| {
                for (r, &s) in norms.iter().enumerate() {
                    let row = r * width..(r + 1) * width;
                    let d = s + *eps;
                    let mut dot = T::zero();
                    for j in row.clone() {
                        dot = dot + g[j] * xv[j];
                    }
                    let coef = if s > T::zero() { dot / (d * d * s) } else { T::zero() };
                    for j in row {
                        slot[j] = slot[j] + g[j] / d - xv[j] * coef;
                    }
                }
            });
        }
        Op::Conv2d { x, w, b, geom, cols } => {
            let rows = geom.batch * geom.oh * geom.ow;
            let patch = geom.kh * geom.kw * geom.c;
            accumulate(nodes, grads, *w, |dw| {
                gemm(
                    MatRef::new(cols, rows, patch).t(),
                    MatRef::new(g, rows, geom.o),
                    T::one(),
                    dw,
                )
            });
            accumulate(nodes, grads, *b, |db| {
                for r in g.chunks(geom.o) {
                    for (s, &q) in db.iter_mut().zip(r) {
                        *s = *s + q;
                    }
                }
            });
            if nodes[x.0].requires_grad {
                let mut dcols = vec![T::zero(); rows * patch];
                gemm(
                    MatRef::new(g, rows, geom.o),
                    MatRef::new(val(*w), patch, geom.o).t(),
                    T::zero(),
                    &mut dcols,
                );
                accumulate(nodes, grads, *x, |dx| col2im(&dcols, geom, dx));
            }
        }
    }
}

fn ops_plan(a: &[usize], b: &[usize], trans_b: bool) -> (ops::MatMulPlan, Vec<usize>) {
    ops::matmul_plan(a, b, trans_b).expect("plan validated at record time")
}
