use std::collections::HashMap;
use std::path::Path;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sitr_core::optics::{CalibMode, TactileImage};
use sitr_core::store::{
    generate_dataset, make_aligned_batch, preprocess, read_f32, read_tnsr, write_tnsr, DatasetManifest,
    GenerateConfig, InMemoryDataset, LoadOptions, Split, Stats, TnsrFile,
};

fn small(dir: &Path, sensors: usize, contacts: usize, seed: u64) -> DatasetManifest {
    let mut cfg = GenerateConfig::new(sensors, contacts, seed);
    cfg.resolution = 24;
    generate_dataset(&cfg, dir).unwrap()
}

fn tree_bytes(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.push((rel, std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn two_by_three_counts_and_layout() {
    let dir = tempfile::tempdir().unwrap();
    let m = small(dir.path(), 2, 3, 7);
    assert_eq!(m.samples.len(), 6);
    assert_eq!(m.sensors.len(), 2);
    assert!(m.sensors.iter().all(|s| s.calibration_paths.len() == 18));
    m.check_integrity(dir.path()).unwrap();
    for s in &m.sensors {
        let d = dir.path().join("sensors").join(&s.sensor_id);
        assert!(d.join("config.json").is_file() && d.join("background.png").is_file());
    }
    assert!(dir.path().join("contacts").join(&m.contacts[0].contact_id).is_dir());
    let (dims, _) = read_f32(&dir.path().join(&m.samples[0].normal_path)).unwrap();
    assert_eq!(dims, vec![24, 24, 3]);
}

#[test]
fn same_seed_same_bytes() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    small(a.path(), 2, 4, 11);
    small(b.path(), 2, 4, 11);
    assert_eq!(tree_bytes(a.path()), tree_bytes(b.path()));
}

#[test]
fn invalid_requests_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = GenerateConfig::new(1, 3, 1);
    assert!(generate_dataset(&cfg, dir.path()).is_err());
    cfg.n_sensors = 2;
    cfg.classes = vec!["sphere".into(), "sphere".into()];
    assert!(generate_dataset(&cfg, dir.path()).is_err());
    let file = dir.path().join("file");
    std::fs::write(&file, b"x").unwrap();
    let cfg = GenerateConfig::new(2, 2, 1);
    assert!(generate_dataset(&cfg, &file.join("sub")).is_err());
}

#[test]
fn integrity_catches_corruption() {
    let dir = tempfile::tempdir().unwrap();
    let m = small(dir.path(), 2, 3, 3);
    let mut bad = m.clone();
    bad.samples[0].contact_id = "nope".into();
    assert!(bad.check_integrity(dir.path()).is_err());
    let mut bad = m.clone();
    bad.samples.pop();
    assert!(bad.check_integrity(dir.path()).is_err());
    let mut bad = m.clone();
    bad.samples[1] = bad.samples[0].clone();
    assert!(bad.check_integrity(dir.path()).is_err());
    std::fs::remove_file(dir.path().join(&m.samples[2].image_path)).unwrap();
    assert!(m.check_integrity(dir.path()).is_err());
}

#[test]
fn normalized_training_signals_are_standardized() {
    let dir = tempfile::tempdir().unwrap();
    let m = small(dir.path(), 3, 10, 5);
    let ds = InMemoryDataset::load(dir.path(), &LoadOptions { image_size: 24, calib_mode: CalibMode::K18, stats: None }).unwrap();
    let train = m.contacts_in(Split::Train);
    let mut sums = [[0.0f64; 2]; 3];
    let mut n = 0.0;
    for s in 0..3 {
        for &c in &train {
            for (i, v) in ds.signals[s][c].iter().enumerate() {
                sums[i % 3][0] += *v as f64;
                sums[i % 3][1] += (*v as f64).powi(2);
            }
            n += 24.0 * 24.0;
        }
    }
    for [s1, s2] in sums {
        let mean = s1 / n;
        let std = (s2 / n - mean * mean).sqrt();
        assert!(mean.abs() < 1e-3, "mean {mean}");
        assert!((std - 1.0).abs() < 1e-2, "std {std}");
    }
}

#[test]
fn aligned_batches() {
    let dir = tempfile::tempdir().unwrap();
    small(dir.path(), 3, 4, 9);
    let ds = InMemoryDataset::load(dir.path(), &LoadOptions { image_size: 24, calib_mode: CalibMode::K4, stats: None }).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let b = make_aligned_batch(&ds, &[0, 1, 2, 3], &mut rng, true).unwrap();
    assert_eq!(b.len(), 8);
    assert_eq!(b.calib_stacks.len(), 8 * 24 * 24 * 12);
    let px = 24 * 24 * 3;
    for pair in 0..4 {
        assert_eq!(b.contact_labels[2 * pair], b.contact_labels[2 * pair + 1]);
        assert_ne!(b.sensor_ids[2 * pair], b.sensor_ids[2 * pair + 1]);
        let n = &b.normals[2 * pair * px..(2 * pair + 2) * px];
        assert_eq!(n[..px], n[px..]);
    }
    let again = make_aligned_batch(&ds, &[0, 1, 2, 3], &mut ChaCha8Rng::seed_from_u64(1), true).unwrap();
    assert_eq!(b, again);

    let mut counts: HashMap<(usize, usize), f64> = HashMap::new();
    let draws = 10_000;
    for _ in 0..draws / 4 {
        let b = make_aligned_batch(&ds, &[0, 1, 2, 3], &mut rng, false).unwrap();
        for p in 0..4 {
            *counts.entry((b.sensor_ids[2 * p], b.sensor_ids[2 * p + 1])).or_default() += 1.0;
        }
    }
    assert_eq!(counts.len(), 6);
    let expected = draws as f64 / 6.0;
    let sigma = (expected * (1.0 - 1.0 / 6.0)).sqrt();
    for c in counts.values() {
        assert!((c - expected).abs() < 3.0 * sigma, "count {c} vs {expected}");
    }
}

#[test]
fn preprocess_subtraction_invariance_is_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    use rand::Rng;
    let stats = Stats { mean: [0.01, -0.02, 0.0], std: [0.1, 0.2, 0.3] };
    for _ in 0..100 {
        let dy = |r: &mut ChaCha8Rng| r.random_range(0..512) as f32 / 1024.0;
        let a: Vec<f32> = (0..48).map(|_| dy(&mut rng)).collect();
        let b: Vec<f32> = (0..48).map(|_| dy(&mut rng)).collect();
        let c = dy(&mut rng);
        let shift = |v: &[f32]| TactileImage::new(4, v.iter().map(|x| x + c).collect());
        let base = preprocess(&TactileImage::new(4, a.clone()), &TactileImage::new(4, b.clone()), &stats, 4).unwrap();
        let shifted = preprocess(&shift(&a), &shift(&b), &stats, 4).unwrap();
        assert_eq!(base, shifted);
    }
}

proptest! {
    #[test]
    fn tnsr_roundtrip_bitwise(dims in prop::collection::vec(1usize..5, 0..=4), seed in any::<u64>(), as_u8 in any::<bool>()) {
        let n: usize = dims.iter().product();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        use rand::Rng;
        let file = if as_u8 {
            TnsrFile::u8(&dims, (0..n).map(|_| rng.random()).collect()).unwrap()
        } else {
            TnsrFile::f32(&dims, (0..n).map(|_| f32::from_bits(rng.random())).collect()).unwrap()
        };
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.tnsr");
        write_tnsr(&p, &file).unwrap();
        let back = read_tnsr(&p).unwrap();
        prop_assert_eq!(back.encode(), file.encode());
    }
}
