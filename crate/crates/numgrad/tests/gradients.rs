//! Autodiff versus central finite differences, one op at a time.

use numgrad::{Tape, Tensor, Var};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random(dims: &[usize], rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> Tensor<f64> {
    Tensor::from_fn(dims.to_vec(), |_| rng.random_range(lo..hi))
}

/// Builds `sum(weights ⊙ f(inputs))` so every output coordinate matters.
fn weighted_loss(
    tape: &mut Tape<f64>,
    inputs: &[Var],
    f: &dyn Fn(&mut Tape<f64>, &[Var]) -> Var,
    seed: u64,
) -> Var {
    let out = f(tape, inputs);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = Tensor::from_fn(tape.dims(out).to_vec(), |_| rng.random_range(-1.0..1.0));
    let w = tape.constant(w);
    let prod = tape.mul(out, w).unwrap();
    tape.sum(prod)
}

fn check(name: &str, inputs: Vec<Tensor<f64>>, f: &dyn Fn(&mut Tape<f64>, &[Var]) -> Var) {
    let h = 1e-3;
    let eval = |vals: &[Tensor<f64>]| {
        let mut tape = Tape::new();
        let vars: Vec<Var> = vals.iter().map(|t| tape.param(t.clone())).collect();
        let loss = weighted_loss(&mut tape, &vars, f, 99);
        tape.value(loss).item()
    };
    let mut tape = Tape::new();
    let vars: Vec<Var> = inputs.iter().map(|t| tape.param(t.clone())).collect();
    let loss = weighted_loss(&mut tape, &vars, f, 99);
    tape.backward(loss).unwrap();
    for (k, v) in vars.iter().enumerate() {
        let g = tape.grad(*v).unwrap().to_vec();
        for idx in 0..inputs[k].len() {
            let mut plus = inputs.clone();
            plus[k].data_mut()[idx] += h;
            let mut minus = inputs.clone();
            minus[k].data_mut()[idx] -= h;
            let fd = (eval(&plus) - eval(&minus)) / (2.0 * h);
            let denom = fd.abs().max(g[idx].abs()).max(1e-6);
            let rel = (fd - g[idx]).abs() / denom;
            assert!(
                rel < 1e-4 || (fd - g[idx]).abs() < 1e-8,
                "{name}: input {k} coord {idx}: autodiff {} vs fd {fd} (rel {rel})",
                g[idx]
            );
        }
    }
}

#[test]
fn grad_matmul_variants() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    check("matmul", vec![random(&[4, 5], &mut rng, -1.0, 1.0), random(&[5, 3], &mut rng, -1.0, 1.0)], &|t, v| {
        t.matmul(v[0], v[1]).unwrap()
    });
    check("matmul_shared_b", vec![random(&[2, 3, 4], &mut rng, -1.0, 1.0), random(&[4, 2], &mut rng, -1.0, 1.0)], &|t, v| {
        t.matmul(v[0], v[1]).unwrap()
    });
    check("matmul_batched", vec![random(&[2, 3, 4], &mut rng, -1.0, 1.0), random(&[2, 4, 2], &mut rng, -1.0, 1.0)], &|t, v| {
        t.matmul(v[0], v[1]).unwrap()
    });
    check("matmul_nt", vec![random(&[2, 3, 4], &mut rng, -1.0, 1.0), random(&[2, 5, 4], &mut rng, -1.0, 1.0)], &|t, v| {
        t.matmul_nt(v[0], v[1]).unwrap()
    });
    check("matmul_nt_shared", vec![random(&[3, 4], &mut rng, -1.0, 1.0), random(&[3, 4], &mut rng, -1.0, 1.0)], &|t, v| {
        t.matmul_nt(v[0], v[1]).unwrap()
    });
}

#[test]
fn grad_elementwise() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let a = random(&[3, 4], &mut rng, -1.0, 1.0);
    let b = random(&[3, 4], &mut rng, -1.0, 1.0);
    let row = random(&[4], &mut rng, -1.0, 1.0);
    let pos = random(&[3, 4], &mut rng, 0.5, 2.0);
    check("add", vec![a.clone(), b.clone()], &|t, v| t.add(v[0], v[1]).unwrap());
    check("add_bcast", vec![a.clone(), row.clone()], &|t, v| t.add(v[0], v[1]).unwrap());
    check("add_bcast_lhs", vec![row.clone(), a.clone()], &|t, v| t.add(v[0], v[1]).unwrap());
    check("sub_bcast", vec![a.clone(), row.clone()], &|t, v| t.sub(v[0], v[1]).unwrap());
    check("mul", vec![a.clone(), b.clone()], &|t, v| t.mul(v[0], v[1]).unwrap());
    check("mul_bcast", vec![a.clone(), row.clone()], &|t, v| t.mul(v[0], v[1]).unwrap());
    check("scale", vec![a.clone()], &|t, v| t.scale(v[0], 1.7));
    check("add_scalar", vec![a.clone()], &|t, v| t.add_scalar(v[0], 0.3));
    check("gelu", vec![random(&[3, 4], &mut rng, -3.0, 3.0)], &|t, v| t.gelu(v[0]));
    check("relu", vec![pos.clone()], &|t, v| t.relu(v[0]));
    check("exp", vec![a.clone()], &|t, v| t.exp(v[0]));
    check("log", vec![pos.clone()], &|t, v| t.log(v[0]).unwrap());
    check("sqrt", vec![pos.clone()], &|t, v| t.sqrt(v[0]).unwrap());
}

#[test]
fn grad_shape_ops() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let x = random(&[2, 3, 4], &mut rng, -1.0, 1.0);
    let y = random(&[2, 1, 4], &mut rng, -1.0, 1.0);
    check("reshape", vec![x.clone()], &|t, v| t.reshape(v[0], &[6, 4]).unwrap());
    check("permute", vec![x.clone()], &|t, v| t.permute(v[0], &[2, 0, 1]).unwrap());
    check("concat", vec![y.clone(), x.clone()], &|t, v| t.concat(&[v[0], v[1]], 1).unwrap());
    check("slice", vec![x.clone()], &|t, v| t.slice(v[0], 1, 1, 2).unwrap());
}

#[test]
fn grad_reductions_and_norms() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let x = random(&[3, 5], &mut rng, -2.0, 2.0);
    check("softmax_last", vec![x.clone()], &|t, v| t.softmax(v[0], 1).unwrap());
    check("softmax_first", vec![x.clone()], &|t, v| t.softmax(v[0], 0).unwrap());
    check("log_softmax", vec![x.clone()], &|t, v| t.log_softmax(v[0], 1).unwrap());
    check("mean", vec![x.clone()], &|t, v| t.mean(v[0]));
    check("mean_axis", vec![random(&[2, 3, 4], &mut rng, -1.0, 1.0)], &|t, v| t.mean_axis(v[0], 1).unwrap());
    check("l2_normalize", vec![x.clone()], &|t, v| t.l2_normalize(v[0], 1e-8).unwrap());
    let g = random(&[5], &mut rng, 0.5, 1.5);
    let b = random(&[5], &mut rng, -0.5, 0.5);
    check("layernorm", vec![x.clone(), g, b], &|t, v| t.layernorm(v[0], v[1], v[2], 1e-5).unwrap());
}

#[test]
fn grad_conv2d() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let x = random(&[2, 5, 5, 2], &mut rng, -1.0, 1.0);
    let w = random(&[3, 3, 2, 3], &mut rng, -1.0, 1.0);
    let b = random(&[3], &mut rng, -1.0, 1.0);
    check("conv2d_s2", vec![x.clone(), w.clone(), b.clone()], &|t, v| t.conv2d(v[0], v[1], v[2], 2, 1).unwrap());
    check("conv2d_s1", vec![x, w, b], &|t, v| t.conv2d(v[0], v[1], v[2], 1, 0).unwrap());
}

#[test]
fn matmul_sum_gradient_is_ones_times_bt() {
    // f32 path: d(sum(a@b))/da = ones(4,3) @ bᵀ, checked against finite differences.
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let a: Tensor<f32> = Tensor::from_fn(vec![4, 5], |_| rng.random_range(-1.0..1.0));
    let b: Tensor<f32> = Tensor::from_fn(vec![5, 3], |_| rng.random_range(-1.0..1.0));
    let mut tape = Tape::<f32>::new();
    let (va, vb) = (tape.param(a.clone()), tape.constant(b.clone()));
    let c = tape.matmul(va, vb).unwrap();
    let s = tape.sum(c);
    tape.backward(s).unwrap();
    let g = tape.grad(va).unwrap();
    for i in 0..4 {
        for k in 0..5 {
            let expected: f32 = (0..3).map(|j| b.data()[k * 3 + j]).sum();
            let got = g[i * 5 + k];
            assert!((got - expected).abs() / expected.abs().max(1e-3) < 1e-4);
            // central difference in 64-bit on the same inputs
            let h = 1e-3;
            let f = |delta: f64| {
                let mut s = 0.0f64;
                for ii in 0..4 {
                    for j in 0..3 {
                        for kk in 0..5 {
                            let mut av = a.data()[ii * 5 + kk] as f64;
                            if ii == i && kk == k {
                                av += delta;
                            }
                            s += av * b.data()[kk * 3 + j] as f64;
                        }
                    }
                }
                s
            };
            let fd = (f(h) - f(-h)) / (2.0 * h);
            assert!(((got as f64) - fd).abs() / fd.abs().max(1e-3) < 1e-4);
        }
    }
}
