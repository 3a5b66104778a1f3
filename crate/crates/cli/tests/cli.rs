use std::path::Path;
use std::process::{Command, Output};

use sitr_core::optics::{normal_from_height, raw_imprint, ContactScene, SensorConfig};
use sitr_core::store::image::read_rgb;
use sitr_core::store::{read_f32, write_f32, DatasetManifest};

fn sitr(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sitr"))
        .args(args)
        .current_dir(dir)
        .env("SITR_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = sitr(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn code(dir: &Path, args: &[&str]) -> i32 {
    sitr(dir, args).status.code().expect("exit code")
}

const TINY: &[&str] = &["--dim", "64", "--depth", "1", "--heads", "2", "--patch", "4", "--lr", "1e-3", "--batch-contacts", "8"];

#[test]
fn gen_counts_determinism_and_usage_errors() {
    let t = tempfile::tempdir().unwrap();
    let d = t.path();
    let out = ok(d, &["gen", "--sensors", "2", "--contacts", "3", "--seed", "7", "--out", "a"]);
    assert!(out.contains("6 samples"), "{out}");
    ok(d, &["gen", "--sensors", "2", "--contacts", "3", "--seed", "7", "--out", "b"]);
    let (a, b) = (std::fs::read(d.join("a/manifest.json")).unwrap(), std::fs::read(d.join("b/manifest.json")).unwrap());
    assert_eq!(a, b);
    assert!(d.join("a/run_config.json").exists());
    assert_eq!(code(d, &["gen", "--sensors", "1", "--contacts", "3", "--out", "c"]), 2);
    assert_eq!(code(d, &["gen", "--sensors", "2", "--contacts", "3", "--calib", "k5", "--out", "c"]), 2);
    assert_eq!(code(d, &["gen", "--sensors", "two", "--contacts", "3", "--out", "c"]), 2);
    assert_eq!(code(d, &["frobnicate"]), 2);
}

#[test]
fn desk_pretrain_smoke_lowers_loss() {
    let t = tempfile::tempdir().unwrap();
    let d = t.path();
    ok(d, &["gen", "--sensors", "2", "--contacts", "8", "--seed", "3", "--out", "data"]);
    ok(d, &["pretrain", "--data", "data", "--epochs", "3", "--out", "ck"]);
    let csv = std::fs::read_to_string(d.join("ck/loss.csv")).unwrap();
    let totals: Vec<f64> = csv.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(totals.len(), 3);
    assert!(totals[2] < totals[0], "{totals:?}");
    for f in ["config.json", "training.json", "run_config.json", "cls.tnsr", "calib_proj.w.tnsr"] {
        assert!(d.join("ck").join(f).exists(), "{f}");
    }
}

#[test]
fn divergent_training_exits_with_numeric_code() {
    let t = tempfile::tempdir().unwrap();
    let d = t.path();
    ok(d, &["gen", "--sensors", "2", "--contacts", "16", "--seed", "3", "--resolution", "16", "--calib", "k0", "--out", "data"]);
    let args = ["pretrain", "--data", "data", "--epochs", "4", "--dim", "64", "--depth", "1", "--heads", "2", "--patch", "4", "--lr", "1e30", "--out", "ck"];
    let out = sitr(d, &args);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("step"));
}

fn matrix(path: &Path) -> Vec<Vec<f64>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').skip(1).map(|v| v.parse().unwrap()).collect())
        .collect()
}

#[test]
fn eval_transfer_outputs_are_consistent() {
    let t = tempfile::tempdir().unwrap();
    let d = t.path();
    ok(d, &["gen", "--sensors", "2", "--contacts", "24", "--seed", "5", "--resolution", "32", "--calib", "k4", "--out", "data"]);
    let mut args = vec!["pretrain", "--data", "data", "--epochs", "2", "--out", "ck"];
    args.extend_from_slice(TINY);
    ok(d, &args);

    ok(d, &["eval-transfer", "--task", "classification", "--data", "data", "--ckpt", "ck", "--epochs", "3", "--out", "cls"]);
    let m = matrix(&d.join("cls/transfer_matrix.csv"));
    assert_eq!(m.len(), 2);
    assert!(m.iter().all(|r| r.len() == 2 && r.iter().all(|v| (0.0..=1.0).contains(v))));
    let s: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.join("cls/summary.json")).unwrap()).unwrap();
    assert!((s["transfer"].as_f64().unwrap() - (m[0][1] + m[1][0]) / 2.0).abs() < 1e-12);
    assert!((s["no_transfer"].as_f64().unwrap() - (m[0][0] + m[1][1]) / 2.0).abs() < 1e-12);
    assert_eq!(s["metric_kind"], "accuracy");
    let emb = std::fs::read_to_string(d.join("cls/embeddings.csv")).unwrap();
    assert_eq!(emb.lines().count(), 1 + 2 * 24);

    ok(d, &["eval-transfer", "--task", "pose", "--data", "data", "--ckpt", "ck", "--epochs", "2", "--out", "pose"]);
    let s: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.join("pose/summary.json")).unwrap()).unwrap();
    assert_eq!(s["metric_kind"], "rmse");
    assert_eq!(s["units"], "mm");

    assert_eq!(code(d, &["eval-transfer", "--task", "segmentation", "--data", "data", "--ckpt", "ck", "--out", "x"]), 2);
    assert_eq!(code(d, &["eval-transfer", "--data", "data", "--ckpt", "missing", "--out", "x"]), 3);

    // every press of its own object leaves pose without labels
    let mut man: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.join("data/manifest.json")).unwrap()).unwrap();
    for (i, c) in man["contacts"].as_array_mut().unwrap().iter_mut().enumerate() {
        c["object_id"] = serde_json::json!(i);
    }
    std::fs::write(d.join("data/manifest.json"), serde_json::to_string(&man).unwrap()).unwrap();
    DatasetManifest::load(&d.join("data")).unwrap();
    assert_eq!(code(d, &["eval-transfer", "--task", "pose", "--data", "data", "--ckpt", "ck", "--out", "bad"]), 5);
    assert!(!d.join("bad/summary.json").exists());
}

fn write_config(dir: &Path, name: &str, angle: f64) {
    let mut cfg = SensorConfig::reference(name, 64);
    cfg.light_angle_deg = angle;
    std::fs::write(dir.join(format!("{name}.json")), serde_json::to_string(&cfg).unwrap()).unwrap();
}

#[test]
fn render_outputs_and_errors() {
    let t = tempfile::tempdir().unwrap();
    let d = t.path();
    write_config(d, "lo", 5.0);
    write_config(d, "hi", 30.0);
    ok(d, &["render", "--sensor-config", "lo.json", "--object", "sphere:2.0", "--depth", "0", "--pos", "0,0", "--out", "flat"]);
    let (_, _, sig) = read_rgb(&d.join("flat_signal.png")).unwrap();
    assert!(sig.iter().all(|v| *v == 128));

    for n in ["lo", "hi"] {
        let cfg = format!("{n}.json");
        ok(d, &["render", "--sensor-config", &cfg, "--object", "sphere:2.0", "--depth", "0.5", "--pos", "0.5,-1", "--out", n]);
    }
    let (dims, _) = read_f32(&d.join("lo_normal.tnsr")).unwrap();
    assert_eq!(dims, vec![64, 64, 3]);
    let (_, _, a) = read_rgb(&d.join("lo_image.png")).unwrap();
    let (_, _, b) = read_rgb(&d.join("hi_image.png")).unwrap();
    let l1: u64 = a.iter().zip(&b).map(|(x, y)| (*x as i64 - *y as i64).unsigned_abs()).sum();
    assert!(l1 > 0);
    assert_eq!(read_f32(&d.join("lo_normal.tnsr")).unwrap(), read_f32(&d.join("hi_normal.tnsr")).unwrap());

    for bad in ["blob:1", "sphere:x", "sphere:-1"] {
        assert_eq!(code(d, &["render", "--sensor-config", "lo.json", "--object", bad, "--depth", "0.5", "--out", "e"]), 2, "{bad}");
    }
    assert_eq!(code(d, &["render", "--sensor-config", "lo.json", "--object", "sphere:2", "--depth", "0.5", "--pos", "1", "--out", "e"]), 2);
    assert_eq!(code(d, &["render", "--sensor-config", "none.json", "--object", "sphere:2", "--depth", "0.5", "--out", "e"]), 3);
}

#[test]
fn reconstruct_outputs_and_errors() {
    let t = tempfile::tempdir().unwrap();
    let d = t.path();
    let r = 32;
    let flat: Vec<f32> = (0..r * r).flat_map(|_| [0.0, 0.0, 1.0]).collect();
    write_f32(&d.join("flat.tnsr"), &[r, r, 3], &flat).unwrap();
    ok(d, &["reconstruct", "--normal", "flat.tnsr", "--pitch-mm", "0.25", "--out", "h.tnsr"]);
    let (dims, h) = read_f32(&d.join("h.tnsr")).unwrap();
    assert_eq!(dims, vec![r, r]);
    assert!(h.iter().all(|v| v.abs() < 1e-9));
    assert!(d.join("h.png").exists());

    let scene = ContactScene::new("c", "sphere", &[4.0], [0.0, 0.0], 1.0);
    let truth = raw_imprint(&scene, 64).unwrap();
    write_f32(&d.join("cap.tnsr"), &[64, 64, 3], &normal_from_height(&truth).to_f32()).unwrap();
    ok(d, &["reconstruct", "--normal", "cap.tnsr", "--pitch-mm", &truth.pixel_pitch_mm.to_string(), "--out", "cap_h.tnsr"]);
    let (_, got) = read_f32(&d.join("cap_h.tnsr")).unwrap();
    let n = got.len() as f64;
    let (mt, mg) = (truth.values.iter().sum::<f64>() / n, got.iter().map(|v| *v as f64).sum::<f64>() / n);
    let (mut c, mut vt, mut vg) = (0.0, 0.0, 0.0);
    for (t, g) in truth.values.iter().zip(&got) {
        let (a, b) = (t - mt, *g as f64 - mg);
        c += a * b;
        vt += a * a;
        vg += b * b;
    }
    assert!(c / (vt * vg).sqrt() >= 0.99);

    std::fs::write(d.join("junk.tnsr"), b"TNSR\x09").unwrap();
    assert_eq!(code(d, &["reconstruct", "--normal", "junk.tnsr", "--pitch-mm", "0.25", "--out", "j.tnsr"]), 3);
    write_f32(&d.join("rank2.tnsr"), &[4, 4], &[0.0; 16]).unwrap();
    assert_eq!(code(d, &["reconstruct", "--normal", "rank2.tnsr", "--pitch-mm", "0.25", "--out", "j.tnsr"]), 3);
    assert_eq!(code(d, &["reconstruct", "--normal", "flat.tnsr", "--pitch-mm", "0", "--out", "j.tnsr"]), 2);
}

#[test]
fn ablate_axes_emit_one_row_per_cell() {
    let t = tempfile::tempdir().unwrap();
    let d = t.path();
    ok(d, &["gen", "--sensors", "2", "--contacts", "12", "--seed", "9", "--resolution", "16", "--out", "data"]);
    for (axis, cells) in [("loss", vec!["normal_only", "scl_only", "both"]), ("tau", vec!["0.25", "0.10", "0.07", "0.03", "0.01"]), ("calib", vec!["k0", "k4", "k9", "k8", "k18"])] {
        let out = format!("ab_{axis}");
        let mut args = vec!["ablate", "--axis", axis, "--data", "data", "--epochs", "1", "--head-epochs", "1", "--out", &out];
        args.extend_from_slice(TINY);
        ok(d, &args);
        let csv = std::fs::read_to_string(d.join(&out).join("ablation.csv")).unwrap();
        let got: Vec<&str> = csv.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
        assert_eq!(got, cells);
        for c in cells {
            assert!(d.join(&out).join(c).join("transfer_matrix.csv").exists());
        }
    }
    assert_eq!(code(d, &["ablate", "--axis", "depth", "--data", "data", "--out", "x"]), 2);
}
