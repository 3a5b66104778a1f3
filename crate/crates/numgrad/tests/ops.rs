use numgrad::{Tape, Tensor, TensorError};
use proptest::prelude::*;

fn t(dims: &[usize], data: &[f32]) -> Tensor<f32> {
    Tensor::new(dims.to_vec(), data.to_vec()).unwrap()
}

#[test]
fn matmul_hand_cases() {
    let mut tape = Tape::<f32>::new();
    let i = tape.constant(t(&[2, 2], &[1.0, 0.0, 0.0, 1.0]));
    let v = tape.constant(t(&[2, 1], &[3.0, 4.0]));
    let out = tape.matmul(i, v).unwrap();
    assert_eq!(tape.data(out), &[3.0, 4.0]);
    let a = tape.constant(t(&[1, 2], &[1.0, 2.0]));
    let out = tape.matmul(a, v).unwrap();
    assert_eq!(tape.dims(out), &[1, 1]);
    assert_eq!(tape.data(out), &[11.0]);
}

#[test]
fn matmul_mismatch_names_both_dims() {
    let mut tape = Tape::<f32>::new();
    let a = tape.constant(Tensor::zeros(vec![2, 3]));
    let b = tape.constant(Tensor::zeros(vec![4, 2]));
    match tape.matmul(a, b) {
        Err(TensorError::Shape { lhs, rhs, .. }) => {
            assert_eq!(lhs, vec![2, 3]);
            assert_eq!(rhs, vec![4, 2]);
        }
        other => panic!("expected shape error, got {other:?}"),
    }
}

#[test]
fn elementwise_identities() {
    let mut tape = Tape::<f32>::new();
    let x = tape.constant(t(&[3], &[1.5, -2.0, 0.25]));
    let z = tape.constant(Tensor::zeros(vec![3]));
    let s = tape.add(x, z).unwrap();
    assert_eq!(tape.data(s), tape.data(x));
    let zero = tape.constant(Tensor::zeros(vec![1]));
    let g = tape.gelu(zero);
    assert_eq!(tape.data(g), &[0.0]);
}

#[test]
fn exp_log_roundtrip() {
    let mut tape = Tape::<f64>::new();
    let x = tape.constant(Tensor::new(vec![4], vec![0.1, 1.0, 2.5, 7.0]).unwrap());
    let e = tape.exp(x);
    let l = tape.log(e).unwrap();
    for (a, b) in tape.data(l).iter().zip(tape.data(x)) {
        assert!((a - b).abs() < 1e-6);
    }
}

#[test]
fn log_sqrt_domain_errors() {
    let mut tape = Tape::<f32>::new();
    let x = tape.constant(t(&[2], &[1.0, -1.0]));
    assert!(matches!(tape.log(x), Err(TensorError::Domain { op: "log", .. })));
    assert!(matches!(tape.sqrt(x), Err(TensorError::Domain { op: "sqrt", .. })));
}

#[test]
fn softmax_symmetric_cases() {
    let mut tape = Tape::<f32>::new();
    let x = tape.constant(Tensor::zeros(vec![3]));
    let s = tape.softmax(x, 0).unwrap();
    for v in tape.data(s) {
        assert!((v - 1.0 / 3.0).abs() < 1e-7);
    }
    let x = tape.constant(Tensor::ones(vec![4]));
    let s = tape.softmax(x, 0).unwrap();
    assert_eq!(tape.data(s), &[0.25; 4]);
}

#[test]
fn softmax_matches_f64_reference() {
    let mut tape = Tape::<f32>::new();
    let x = tape.constant(t(&[3], &[1.0, 2.0, 3.0]));
    let s = tape.softmax(x, 0).unwrap();
    let denom: f64 = (1..=3).map(|k| (k as f64).exp()).sum();
    for (k, v) in tape.data(s).iter().enumerate() {
        let r = ((k + 1) as f64).exp() / denom;
        assert!((*v as f64 - r).abs() < 1e-7, "{v} vs {r}");
    }
}

#[test]
fn layernorm_cases() {
    let mut tape = Tape::<f32>::new();
    let g = tape.constant(Tensor::ones(vec![2]));
    let b = tape.constant(Tensor::zeros(vec![2]));
    let c = tape.constant(t(&[1, 2], &[5.0, 5.0]));
    let out = tape.layernorm(c, g, b, 1e-5).unwrap();
    assert_eq!(tape.data(out), &[0.0, 0.0]);
    let r = tape.constant(t(&[1, 2], &[1.0, -1.0]));
    let out = tape.layernorm(r, g, b, 1e-5).unwrap();
    let expected = 1.0 / (1.0f64 + 1e-5).sqrt();
    assert!((tape.data(out)[0] as f64 - expected).abs() < 1e-6);
    assert!((tape.data(out)[1] as f64 + expected).abs() < 1e-6);
}

#[test]
fn layernorm_row_statistics() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    let mut tape = Tape::<f32>::new();
    let x = tape.constant(Tensor::from_fn(vec![8, 16], |_| rng.random_range(-3.0..3.0)));
    let g = tape.constant(Tensor::ones(vec![16]));
    let b = tape.constant(Tensor::zeros(vec![16]));
    let out = tape.layernorm(x, g, b, 1e-5).unwrap();
    for row in tape.data(out).chunks(16) {
        let m: f64 = row.iter().map(|v| *v as f64).sum::<f64>() / 16.0;
        let var: f64 = row.iter().map(|v| (*v as f64 - m).powi(2)).sum::<f64>() / 16.0;
        assert!(m.abs() < 1e-6, "mean {m}");
        assert!((var - 1.0).abs() < 1e-4, "var {var}");
    }
}

#[test]
fn backward_simple_losses() {
    let mut tape = Tape::<f32>::new();
    let x = tape.param(t(&[3], &[1.0, -2.0, 0.5]));
    let s = tape.sum(x);
    tape.backward(s).unwrap();
    assert_eq!(tape.grad(x).unwrap(), &[1.0, 1.0, 1.0]);

    let mut tape = Tape::<f32>::new();
    let x = tape.param(t(&[3], &[1.0, -2.0, 0.5]));
    let sq = tape.mul(x, x).unwrap();
    let s = tape.sum(sq);
    tape.backward(s).unwrap();
    assert_eq!(tape.grad(x).unwrap(), &[2.0, -4.0, 1.0]);
}

#[test]
fn backward_contract_violations() {
    let mut tape = Tape::<f32>::new();
    let x = tape.param(t(&[2], &[1.0, 2.0]));
    assert!(matches!(tape.backward(x), Err(TensorError::Contract(_))));
    let s = tape.sum(x);
    tape.backward(s).unwrap();
    assert!(matches!(tape.backward(s), Err(TensorError::Contract(_))));
    tape.reset_grads();
    tape.backward(s).unwrap();
}

#[test]
fn constants_receive_no_gradient() {
    let mut tape = Tape::<f32>::new();
    let x = tape.param(t(&[2], &[1.0, 2.0]));
    let c = tape.constant(t(&[2], &[3.0, 4.0]));
    let p = tape.mul(x, c).unwrap();
    let s = tape.sum(p);
    tape.backward(s).unwrap();
    assert!(tape.grad(c).is_none());
    assert_eq!(tape.grad(x).unwrap(), &[3.0, 4.0]);
}

#[test]
fn forward_is_bitwise_deterministic() {
    let run = || {
        let mut tape = Tape::<f32>::new();
        let a = tape.constant(Tensor::from_fn(vec![7, 9], |i| (i as f32 * 0.37).sin()));
        let b = tape.constant(Tensor::from_fn(vec![9, 5], |i| (i as f32 * 0.11).cos()));
        let c = tape.matmul(a, b).unwrap();
        let g = tape.gelu(c);
        let s = tape.softmax(g, 1).unwrap();
        tape.data(s).iter().map(|v| v.to_bits()).collect::<Vec<_>>()
    };
    assert_eq!(run(), run());
}

proptest! {
    #[test]
    fn softmax_rows_sum_to_one_and_shift_invariant(
        row in proptest::collection::vec(-20.0f32..20.0, 1..12),
        shift in -50.0f32..50.0,
    ) {
        let n = row.len();
        let mut tape = Tape::<f32>::new();
        let x = tape.constant(Tensor::new(vec![n], row.clone()).unwrap());
        let s = tape.softmax(x, 0).unwrap();
        let total: f64 = tape.data(s).iter().map(|v| *v as f64).sum();
        prop_assert!((total - 1.0).abs() < 1e-6);
        let shifted: Vec<f64> = row.iter().map(|v| *v as f64 + shift as f64).collect();
        let mut t64 = Tape::<f64>::new();
        let x0 = t64.constant(Tensor::new(vec![n], row.iter().map(|v| *v as f64).collect()).unwrap());
        let x1 = t64.constant(Tensor::new(vec![n], shifted).unwrap());
        let s0 = t64.softmax(x0, 0).unwrap();
        let s1 = t64.softmax(x1, 0).unwrap();
        for (a, b) in t64.data(s0).iter().zip(t64.data(s1)) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn permute_then_inverse_is_identity(d0 in 1usize..4, d1 in 1usize..4, d2 in 1usize..4) {
        let n = d0 * d1 * d2;
        let x = Tensor::<f32>::from_fn(vec![d0, d1, d2], |i| i as f32);
        let p = x.permute(&[1, 2, 0]).unwrap();
        let back = p.permute(&[2, 0, 1]).unwrap();
        prop_assert_eq!(back.data().len(), n);
        prop_assert_eq!(back, x);
    }
}
