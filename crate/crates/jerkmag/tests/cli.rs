use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use jerkmag::cli::Status;
use jerkmag::io::read_sequence;
use jerkmag::manifest::read_manifest;
use jerkmag::report::parse_report;

const GOLDEN_TABLE: &str = "tests/golden/comparison_table.txt";

fn jerkmag(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_jerkmag")).args(args).current_dir(dir).output().expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) {
    let out = jerkmag(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

fn status(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn synth(dir: &Path, name: &str, extra: &[&str]) {
    let mut args = vec!["synth", "--output", name, "--width", "48", "--height", "48", "--duration", "3"];
    args.extend_from_slice(extra);
    ok(dir, &args);
}

#[test]
fn zero_gain_magnify_reproduces_input() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), "clip", &["--texture"]);
    ok(dir.path(), &["magnify", "--input", "clip", "--output", "out", "--alpha", "0"]);
    let input = read_sequence(&dir.path().join("clip"), 30.0).unwrap();
    let output = read_sequence(&dir.path().join("out"), 30.0).unwrap();
    // 16-bit quantisation bounds the difference.
    assert!(output.clip.max_abs_diff(&input.clip) <= 1.0 / 65535.0);
    let manifest = read_manifest(&dir.path().join("out")).unwrap();
    let settings = manifest.magnification.unwrap();
    assert_eq!((settings.mode.as_str(), settings.alpha), ("jerk", 0.0));
    assert_eq!(manifest.boundary.unwrap().per_end, 22);
}

#[test]
fn missing_input_is_reported_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = jerkmag(dir.path(), &["magnify", "--input", "absent", "--output", "out"]);
    assert_eq!(status(&out), Status::InputNotFound.code());
    assert!(String::from_utf8_lossy(&out.stderr).contains("input-not-found"));
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn length_mismatch_has_its_own_status() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), "short", &[]);
    ok(dir.path(), &["synth", "--output", "long", "--width", "48", "--height", "48", "--duration", "4"]);
    let out = jerkmag(
        dir.path(),
        &["metrics", "--source", "short", "--magnified", "long", "--output", "report.txt", "--sample-frames", "10"],
    );
    assert_eq!(status(&out), Status::Mismatch.code());
    assert!(!dir.path().join("report.txt").exists());
}

#[test]
fn invalid_config_and_usage_errors_are_distinct() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), "clip", &[]);
    let out = jerkmag(dir.path(), &["magnify", "--input", "clip", "--output", "out", "--alpha=-1"]);
    assert_eq!(status(&out), Status::InvalidConfig.code());
    let out = jerkmag(dir.path(), &["slice", "--input", "clip", "--line", "row:x", "--output", "s.png"]);
    assert_eq!(status(&out), Status::Usage.code());
    let out = jerkmag(dir.path(), &["slice", "--input", "clip", "--line", "row:48", "--output", "s.png"]);
    assert_eq!(status(&out), Status::InvalidConfig.code());
    assert!(!dir.path().join("out").exists() && !dir.path().join("s.png").exists());
}

#[test]
fn existing_output_is_not_overwritten() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), "clip", &[]);
    let before = std::fs::read(dir.path().join("clip.truth.tsv")).unwrap();
    let out = jerkmag(dir.path(), &["synth", "--output", "clip", "--seed", "5"]);
    assert_eq!(status(&out), Status::OutputError.code());
    assert_eq!(std::fs::read(dir.path().join("clip.truth.tsv")).unwrap(), before);
}

#[test]
fn jerk_chain_reports_near_identity_scores() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), "clip", &["--texture"]);
    ok(dir.path(), &["magnify", "--input", "clip", "--output", "jerk", "--mode", "jerk", "--alpha", "10"]);
    ok(dir.path(), &["metrics", "--source", "clip", "--magnified", "jerk", "--output", "report.txt", "--sample-frames", "40"]);
    let (header, report) = parse_report(&std::fs::read_to_string(dir.path().join("report.txt")).unwrap()).unwrap();
    assert_eq!(header.alpha, Some(10.0));
    // Boundary frames come from the magnified run's manifest.
    assert_eq!(report.boundary_frames, 22);
    assert_eq!(report.frames.first().map(|f| f.frame), Some(22));
    assert_eq!(report.frames.len(), 40);
    assert!(report.mean_ssim > 0.99, "{}", report.mean_ssim);
}

#[test]
fn three_mode_batch_matches_golden_table() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), "clip", &["--motion-amp", "1", "--texture"]);
    let mut metrics = vec!["metrics", "--source", "clip", "--output", "batch", "--sample-frames", "40"];
    for mode in ["linear", "accel", "jerk"] {
        let name = format!("clip-{mode}");
        ok(dir.path(), &["magnify", "--input", "clip", "--output", &name, "--mode", mode, "--alpha", "10"]);
    }
    let names = ["clip-linear", "clip-accel", "clip-jerk"];
    for name in &names {
        metrics.extend_from_slice(&["--magnified", name]);
    }
    ok(dir.path(), &metrics);
    let batch = dir.path().join("batch");
    for name in &names {
        assert!(batch.join(format!("{name}.metrics.txt")).is_file());
    }
    let table = std::fs::read_to_string(batch.join("comparison.txt")).unwrap();
    let golden = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join(GOLDEN_TABLE);
    if std::env::var_os("JERKMAG_BLESS").is_some() {
        std::fs::write(&golden, &table).unwrap();
    }
    assert_eq!(table, std::fs::read_to_string(&golden).unwrap());
}

#[test]
fn row_slice_of_static_clip_has_identical_rows() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), "still", &["--motion-amp", "0", "--texture"]);
    ok(dir.path(), &["slice", "--input", "still", "--line", "row:20", "--output", "sts.png"]);
    let image = image::open(dir.path().join("sts.png")).unwrap().into_luma16();
    assert_eq!(image.dimensions(), (48, 90));
    for y in 1..90 {
        for x in 0..48 {
            assert_eq!(image.get_pixel(x, y), image.get_pixel(x, 0));
        }
    }
}

#[test]
fn seeded_synth_is_reproducible() {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for dir in &dirs {
        synth(dir.path(), "clip.jmv", &["--noise", "0.02", "--seed", "9"]);
    }
    for file in ["clip.jmv", "clip.jmv.truth.tsv", "clip.jmv.mask.png", "clip.jmv.manifest.json"] {
        let a = std::fs::read(dirs[0].path().join(file)).unwrap();
        let b = std::fs::read(dirs[1].path().join(file)).unwrap();
        assert_eq!(a, b, "{file}");
    }
    let other = tempfile::tempdir().unwrap();
    synth(other.path(), "clip.jmv", &["--noise", "0.02", "--seed", "10"]);
    assert_ne!(std::fs::read(other.path().join("clip.jmv")).unwrap(), std::fs::read(dirs[0].path().join("clip.jmv")).unwrap());
}
