//! Command-line contract tests: file inventory, exit codes, determinism.

use std::path::Path;
use std::process::{Command, Output};

fn rayvote(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rayvote"))
        .args(args)
        .env_remove("RAYVOTE_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn synth_demo(dir: &Path, preset: &str, seed: u64) {
    let out = rayvote(&[
        "synth",
        "--preset",
        preset,
        "--views",
        "3",
        "--dims",
        "24,24,16",
        "--image-size",
        "24",
        "--channels",
        "2",
        "--seed",
        &seed.to_string(),
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn synth_writes_expected_inventory() {
    let dir = tempfile::tempdir().unwrap();
    synth_demo(dir.path(), "plane", 3);
    for name in [
        "scene.tsdf",
        "trajectory.txt",
        "manifest.toml",
        "view_000.fmap",
        "view_001.fmap",
        "view_002.fmap",
    ] {
        assert!(dir.path().join(name).is_file(), "missing {name}");
    }
    assert!(!dir.path().join("view_003.fmap").exists());
}

#[test]
fn synth_same_seed_is_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    synth_demo(a.path(), "sphere-clutter", 77);
    synth_demo(b.path(), "sphere-clutter", 77);
    for entry in std::fs::read_dir(a.path()).unwrap() {
        let name = entry.unwrap().file_name();
        let left = std::fs::read(a.path().join(&name)).unwrap();
        let right = std::fs::read(b.path().join(&name)).unwrap();
        assert_eq!(left, right, "{name:?} differs between identical seeds");
    }
    let c = tempfile::tempdir().unwrap();
    synth_demo(c.path(), "sphere-clutter", 78);
    let left = std::fs::read(a.path().join("view_000.fmap")).unwrap();
    let right = std::fs::read(c.path().join("view_000.fmap")).unwrap();
    assert_ne!(left, right, "different seeds should differ");
}

#[test]
fn usage_failures_exit_two() {
    let unknown_preset = rayvote(&["synth", "--preset", "pyramid", "--out", "/tmp/x"]);
    assert_eq!(unknown_preset.status.code(), Some(2));

    let bad_voxel = rayvote(&["synth", "--preset", "plane", "--voxel=-0.5", "--out", "/tmp/x"]);
    assert_eq!(bad_voxel.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad_voxel.stderr).contains("positive"));

    let dir = tempfile::tempdir().unwrap();
    synth_demo(dir.path(), "plane", 0);
    let manifest = dir.path().join("manifest.toml");
    let bad_theta = rayvote(&[
        "aggregate",
        "--manifest",
        manifest.to_str().unwrap(),
        "--scheme",
        "rma",
        "--theta",
        "1.5",
    ]);
    assert_eq!(bad_theta.status.code(), Some(2));
    let zero_threads = rayvote(&[
        "aggregate",
        "--manifest",
        manifest.to_str().unwrap(),
        "--scheme",
        "rma",
        "--threads",
        "0",
    ]);
    assert_eq!(zero_threads.status.code(), Some(2));
}

#[test]
fn runtime_failures_exit_one() {
    let missing = rayvote(&["aggregate", "--manifest", "/nonexistent/manifest.toml", "--scheme", "rma"]);
    assert_eq!(missing.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("/nonexistent/manifest.toml"));

    // Manifest referencing a deleted grid also names the path.
    let dir = tempfile::tempdir().unwrap();
    synth_demo(dir.path(), "plane", 0);
    std::fs::remove_file(dir.path().join("scene.tsdf")).unwrap();
    let out = rayvote(&[
        "aggregate",
        "--manifest",
        dir.path().join("manifest.toml").to_str().unwrap(),
        "--scheme",
        "rma",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("scene.tsdf"));
}

#[test]
fn aggregate_smoke_rma() {
    let dir = tempfile::tempdir().unwrap();
    synth_demo(dir.path(), "plane", 9);
    let ply = dir.path().join("out.ply");
    let out = rayvote(&[
        "aggregate",
        "--manifest",
        dir.path().join("manifest.toml").to_str().unwrap(),
        "--scheme",
        "rma",
        "--samples",
        "80",
        "--scale",
        "50",
        "--out",
        ply.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("scheme: rma"));
    let cloud = rayvote::io::read_ply(&ply).unwrap();
    assert!(!cloud.is_empty());
    assert!(cloud.total_weight().is_finite());
    for line in ["points: ", "total_weight: ", "elapsed_s: "] {
        assert!(text.contains(line), "missing {line} in output");
    }
}

#[test]
fn da_k1_retains_at_most_two_points_per_ray() {
    let dir = tempfile::tempdir().unwrap();
    synth_demo(dir.path(), "plane", 1);
    let ply = dir.path().join("da.ply");
    let out = rayvote(&[
        "aggregate",
        "--manifest",
        dir.path().join("manifest.toml").to_str().unwrap(),
        "--scheme",
        "da",
        "--k",
        "1",
        "--samples",
        "64",
        "--out",
        ply.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let cloud = rayvote::io::read_ply(&ply).unwrap();
    let rays = 3 * 24 * 24;
    assert!(cloud.len() <= 2 * rays);
    assert_eq!(cloud.len() % 2, 0, "k=1 windows come in pairs away from ends");
}

#[test]
fn merge_voxel_writes_companion_ply() {
    let dir = tempfile::tempdir().unwrap();
    synth_demo(dir.path(), "plane", 12);
    let ply = dir.path().join("cloud.ply");
    let out = rayvote(&[
        "aggregate",
        "--manifest",
        dir.path().join("manifest.toml").to_str().unwrap(),
        "--scheme",
        "rma",
        "--samples",
        "64",
        "--scale",
        "50",
        "--merge-voxel",
        "--out",
        ply.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let raw = rayvote::io::read_ply(&ply).unwrap();
    let merged = rayvote::io::read_ply(&dir.path().join("cloud.merged.ply")).unwrap();
    assert!(!merged.is_empty());
    assert!(merged.len() < raw.len(), "1 cm merge should deduplicate votes");
    // Total weight is conserved by the merge (up to f32 output rounding).
    let rel = (merged.total_weight() - raw.total_weight()).abs() / raw.total_weight();
    assert!(rel < 1e-5, "merge changed total weight by {rel}");
}

#[test]
fn va_band_filters_to_near_surface() {
    let dir = tempfile::tempdir().unwrap();
    synth_demo(dir.path(), "plane", 2);
    let manifest = dir.path().join("manifest.toml");
    let all_ply = dir.path().join("all.ply");
    let near_ply = dir.path().join("near.ply");
    assert!(rayvote(&[
        "aggregate",
        "--manifest",
        manifest.to_str().unwrap(),
        "--scheme",
        "va",
        "--out",
        all_ply.to_str().unwrap(),
    ])
    .status
    .success());
    assert!(rayvote(&[
        "aggregate",
        "--manifest",
        manifest.to_str().unwrap(),
        "--scheme",
        "va",
        "--band",
        "0.06",
        "--out",
        near_ply.to_str().unwrap(),
    ])
    .status
    .success());
    let all = rayvote::io::read_ply(&all_ply).unwrap();
    let near = rayvote::io::read_ply(&near_ply).unwrap();
    assert!(!near.is_empty());
    assert!(near.len() < all.len());
}

#[test]
fn eval_single_scheme_single_row() {
    let dir = tempfile::tempdir().unwrap();
    synth_demo(dir.path(), "plane", 4);
    let out = rayvote(&[
        "eval",
        "--manifest",
        dir.path().join("manifest.toml").to_str().unwrap(),
        "--schemes",
        "va",
        "--samples",
        "48",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    let rows: Vec<&str> = text.lines().filter(|l| l.starts_with("va")).collect();
    assert_eq!(rows.len(), 1);
    assert!(!text.lines().any(|l| l.starts_with("rma")));
}

#[test]
fn eval_twice_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    synth_demo(dir.path(), "two-walls", 5);
    let manifest = dir.path().join("manifest.toml");
    let report_a = dir.path().join("a.toml");
    let report_b = dir.path().join("b.toml");
    let run = |report: &Path| {
        let out = rayvote(&[
            "eval",
            "--manifest",
            manifest.to_str().unwrap(),
            "--samples",
            "48",
            "--scale",
            "50",
            "--out",
            report.to_str().unwrap(),
        ]);
        assert!(out.status.success());
        stdout(&out)
    };
    let a = run(&report_a);
    let b = run(&report_b);
    assert_eq!(a.replace("a.toml", ""), b.replace("b.toml", ""));
    assert_eq!(
        std::fs::read(&report_a).unwrap(),
        std::fs::read(&report_b).unwrap()
    );
}

#[test]
fn bench_reports_sample_arithmetic() {
    let dir = tempfile::tempdir().unwrap();
    synth_demo(dir.path(), "plane", 6);
    let out = rayvote(&[
        "bench",
        "--manifest",
        dir.path().join("manifest.toml").to_str().unwrap(),
        "--samples",
        "32",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    let grab = |key: &str| -> u64 {
        text.lines()
            .find(|l| l.starts_with(key))
            .unwrap_or_else(|| panic!("missing {key}"))
            .split(": ")
            .nth(1)
            .unwrap()
            .parse()
            .unwrap()
    };
    assert_eq!(grab("rays"), 3 * 24 * 24);
    assert_eq!(grab("samples_per_ray"), 32);
    assert_eq!(grab("total_samples"), 3 * 24 * 24 * 32);
}

#[test]
fn empty_scene_bench_completes() {
    // A grid with no geometry in view still benches: near-zero retained
    // points but a full report.
    let dir = tempfile::tempdir().unwrap();
    synth_demo(dir.path(), "plane", 8);
    // Replace the grid with all free space.
    let grid = rayvote::io::read_tsdf_grid(&dir.path().join("scene.tsdf")).unwrap();
    let free = rayvote::bake(
        &rayvote::AnalyticScene::sphere(nalgebra_point(50.0), 0.1),
        grid.dims(),
        grid.origin(),
        grid.voxel_size(),
        grid.truncation(),
    )
    .unwrap();
    rayvote::io::write_tsdf_grid(&dir.path().join("scene.tsdf"), &free).unwrap();
    let out = rayvote(&[
        "bench",
        "--manifest",
        dir.path().join("manifest.toml").to_str().unwrap(),
        "--samples",
        "32",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("rma_points: 0"));
}

fn nalgebra_point(x: f64) -> nalgebra::Point3<f64> {
    nalgebra::Point3::new(x, 0.0, 0.0)
}
