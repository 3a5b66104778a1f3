use numgrad::{Tape, Tensor};
use sitr_core::encoder::{
    decode_normal, embed_class, encode, forward, patchify_tensor, tokenize, unpatchify_tensor, Encoder,
    EncoderConfig,
};

fn tiny(k: usize) -> EncoderConfig {
    EncoderConfig {
        image_size: 16,
        patch_size: 4,
        embed_dim: 16,
        depth: 2,
        num_heads: 2,
        k,
        channels: 3,
        embed_out: 128,
        mlp_ratio: 4,
    }
}

fn input(b: usize, h: usize, c: usize, salt: f32) -> Tensor<f32> {
    Tensor::from_fn(vec![b, h, h, c], |i| ((i as f32 + salt) * 0.713).sin() * 0.5)
}

/// Closed-form count written independently of the library layout.
fn expected_params(h_p: usize, d: usize, depth: usize, k: usize) -> usize {
    let patch = h_p * h_p * 3;
    let embed = (patch + 1) * d + if k > 0 { (k * patch + 1) * d } else { 0 };
    let tokens = d + 2 * d;
    let per_block = 12 * d * d + 13 * d;
    let final_norm = 2 * d;
    let heads = (d + 1) * patch + (d + 1) * 128;
    embed + tokens + depth * per_block + final_norm + heads
}

#[test]
fn parameter_count_matches_closed_form() {
    for (cfg, p) in [(tiny(4), 4), (tiny(0), 4), (EncoderConfig::desk(18), 8)] {
        let enc = Encoder::new(cfg.clone(), 1).unwrap();
        let want = expected_params(p, cfg.embed_dim, cfg.depth, cfg.k);
        assert_eq!(enc.params.count(), want);
        assert_eq!(cfg.parameter_count(), want);
    }
    let base = EncoderConfig::base(18).parameter_count() as f64;
    assert_eq!(base as usize, expected_params(16, 768, 12, 18));
    assert!((base / 96e6 - 1.0).abs() < 0.05, "{base}");
}

#[test]
fn sequence_length_law() {
    for k in [0, 4] {
        let mut cfg = EncoderConfig::base(k);
        cfg.embed_dim = 8;
        cfg.num_heads = 2;
        let enc = Encoder::new(cfg.clone(), 0).unwrap();
        let mut t = Tape::<f32>::new();
        let p = enc.bind(&mut t, false);
        let x = t.constant(Tensor::zeros(vec![1, 224, 224, 3]));
        let c = (k > 0).then(|| t.constant(Tensor::zeros(vec![1, 224, 224, 3 * k])));
        let seq = tokenize(&mut t, &cfg, &p, x, c).unwrap();
        let want = if k > 0 { 393 } else { 197 };
        assert_eq!(t.dims(seq), &[1, want, 8]);
        assert_eq!(cfg.seq_len(), want);
    }
}

#[test]
fn calibration_mismatch_is_config_error() {
    let cfg = tiny(4);
    let enc = Encoder::new(cfg.clone(), 0).unwrap();
    let mut t = Tape::<f32>::new();
    let p = enc.bind(&mut t, false);
    let x = t.constant(input(1, 16, 3, 0.0));
    let wrong = t.constant(input(1, 16, 9, 0.0));
    assert!(tokenize(&mut t, &cfg, &p, x, Some(wrong)).is_err());
    assert!(tokenize(&mut t, &cfg, &p, x, None).is_err());
}

#[test]
fn calibration_conditions_the_representation() {
    let cfg = tiny(2);
    let enc = Encoder::new(cfg, 3).unwrap();
    let x = input(1, 16, 3, 0.0);
    let c1 = input(1, 16, 6, 5.0);
    let swapped = Tensor::from_fn(vec![1, 16, 16, 6], |i| {
        let (px, ch) = (i / 6, i % 6);
        c1.data()[px * 6 + (ch + 3) % 6]
    });
    let c2 = input(1, 16, 6, 9.0);
    let r1 = enc.represent(&x, Some(&c1), 4).unwrap();
    let r2 = enc.represent(&x, Some(&c2), 4).unwrap();
    let r3 = enc.represent(&x, Some(&swapped), 4).unwrap();
    assert_ne!(r1.z, r2.z);
    assert_ne!(r1.z, r3.z);
    assert_eq!(r1, enc.represent(&x, Some(&c1), 4).unwrap());
}

#[test]
fn encode_preserves_shape_and_chunks_agree() {
    let cfg = tiny(1);
    let enc = Encoder::new(cfg.clone(), 4).unwrap();
    let mut t = Tape::<f32>::new();
    let p = enc.bind(&mut t, false);
    let x = t.constant(input(3, 16, 3, 0.0));
    let c = t.constant(input(3, 16, 3, 1.0));
    let seq = tokenize(&mut t, &cfg, &p, x, Some(c)).unwrap();
    let out = encode(&mut t, &cfg, &p, seq).unwrap();
    assert_eq!(t.dims(seq), t.dims(out));
    let xs = input(3, 16, 3, 0.0);
    let cs = input(3, 16, 3, 1.0);
    let whole = enc.represent(&xs, Some(&cs), 3).unwrap();
    let parts = enc.represent(&xs, Some(&cs), 1).unwrap();
    assert_eq!(whole.z.dims(), &[3, 16]);
    assert_eq!(whole.tokens.dims(), &[3, 16, 16]);
    for (a, b) in whole.z.data().iter().zip(parts.z.data()) {
        assert!((a - b).abs() < 1e-5);
    }
}

#[test]
fn decoder_with_constant_bias() {
    let cfg = tiny(0);
    let mut enc = Encoder::new(cfg.clone(), 0).unwrap();
    enc.params.tensors.get_mut("normal_head.w").unwrap().data_mut().fill(0.0);
    let bias = enc.params.tensors.get_mut("normal_head.b").unwrap();
    for (i, v) in bias.data_mut().iter_mut().enumerate() {
        *v = if i % 3 == 2 { 1.0 } else { 0.0 };
    }
    let mut t = Tape::<f32>::new();
    let p = enc.bind(&mut t, false);
    let x = t.constant(input(2, 16, 3, 0.0));
    let out = forward(&mut t, &cfg, &p, x, None).unwrap();
    let n = decode_normal(&mut t, &cfg, &p, out.tokens).unwrap();
    assert_eq!(t.dims(n), &[2, 16, 16, 3]);
    for (i, v) in t.data(n).iter().enumerate() {
        assert_eq!(*v, if i % 3 == 2 { 1.0 } else { 0.0 });
    }
    let short = t.slice(out.tokens, 1, 0, 4).unwrap();
    assert!(decode_normal(&mut t, &cfg, &p, short).is_err());
}

#[test]
fn embeddings_are_unit_and_scale_invariant() {
    let cfg = tiny(0);
    let mut enc = Encoder::new(cfg.clone(), 2).unwrap();
    enc.params.tensors.get_mut("embed_head.b").unwrap().data_mut().fill(0.0);
    let mut t = Tape::<f32>::new();
    let p = enc.bind(&mut t, false);
    let z = t.constant(Tensor::from_fn(vec![5, 16], |i| (i as f32 * 1.3).cos()));
    let z3 = t.scale(z, 3.0);
    let e = embed_class(&mut t, &cfg, &p, z).unwrap();
    let e3 = embed_class(&mut t, &cfg, &p, z3).unwrap();
    assert_eq!(t.dims(e), &[5, 128]);
    for row in t.data(e).chunks(128) {
        let n: f32 = row.iter().map(|v| v * v).sum::<f32>().sqrt();
        assert!((n - 1.0).abs() < 1e-6);
    }
    for (a, b) in t.data(e).iter().zip(t.data(e3)) {
        assert!((a - b).abs() < 1e-6);
    }
}

#[test]
fn positions_are_the_only_source_of_spatial_order() {
    let cfg = tiny(0);
    let mut enc = Encoder::new(cfg.clone(), 5).unwrap();
    enc.pos_table = Tensor::zeros(enc.pos_table.dims().to_vec());
    let x = input(1, 16, 3, 0.0);
    let patches = patchify_tensor(&x, 4).unwrap();
    let n = 16;
    let perm: Vec<usize> = (0..n).map(|i| (i * 5 + 3) % n).collect();
    let width = patches.dims()[2];
    let permuted = Tensor::from_fn(vec![1, n, width], |i| patches.data()[perm[i / width] * width + i % width]);
    let xp = unpatchify_tensor(&permuted, 4).unwrap();
    let a = enc.represent(&x, None, 1).unwrap();
    let b = enc.represent(&xp, None, 1).unwrap();
    for (u, v) in a.z.data().iter().zip(b.z.data()) {
        assert!((u - v).abs() < 1e-5);
    }
    let d = cfg.embed_dim;
    for (i, &src) in perm.iter().enumerate() {
        for j in 0..d {
            assert!((b.tokens.data()[i * d + j] - a.tokens.data()[src * d + j]).abs() < 1e-5);
        }
    }
    let with_pos = Encoder::new(cfg, 5).unwrap();
    assert_ne!(with_pos.represent(&x, None, 1).unwrap().z, with_pos.represent(&xp, None, 1).unwrap().z);
}

#[test]
fn checkpoint_roundtrip_bitwise() {
    let dir = tempfile::tempdir().unwrap();
    let enc = Encoder::new(tiny(4), 8).unwrap();
    enc.save(dir.path()).unwrap();
    let back = Encoder::load(dir.path()).unwrap();
    assert_eq!(back, enc);
    assert_eq!(back.params.checksum(), enc.params.checksum());
    std::fs::write(dir.path().join("cls.tnsr"), b"TNSR").unwrap();
    assert!(Encoder::load(dir.path()).is_err());
}

#[test]
fn rejects_indivisible_configs() {
    let mut cfg = tiny(0);
    cfg.patch_size = 5;
    assert!(Encoder::new(cfg, 0).is_err());
    let mut cfg = tiny(0);
    cfg.num_heads = 3;
    assert!(Encoder::new(cfg, 0).is_err());
}
