use std::path::Path;
use std::process::{Command, Output};

fn leeyang(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_leeyang"))
        .args(args)
        .env("LEEYANG_WORKERS", "1")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.toml");
    std::fs::write(&path, text).unwrap();
    path.display().to_string()
}

const CIRCLE: &str = r#"
[model]
kind = "XY"
L = 6
gamma = 0.8

[scan]
mode = "circle"
g = [0.7]

[output]
directory = "ignored"
"#;

#[test]
fn circle_scan_writes_tables() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), CIRCLE);
    let out_dir = dir.path().join("out");
    let out = leeyang(&["scan", "--config", &config, "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("g = 0.7: 12 zeros"), "{stdout}");
    for name in ["circle_g0p7.csv", "zeros_g0p7.csv", "zeros_g0p7.json", "edge_g0p7.json", "manifest.json"] {
        assert!(out_dir.join(name).exists(), "{name} missing");
    }
}

#[test]
fn csv_only_output() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), CIRCLE);
    let out_dir = dir.path().join("out");
    let out = leeyang(&["scan", "--config", &config, "--out", out_dir.to_str().unwrap(), "--format", "csv"]);
    assert!(out.status.success());
    let mut names: Vec<String> = std::fs::read_dir(&out_dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    assert_eq!(names, ["circle_g0p7.csv", "manifest.json", "zeros_g0p7.csv"]);
}

#[test]
fn missing_length_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), &CIRCLE.replace("L = 6\n", ""));
    let out = leeyang(&["scan", "--config", &config]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains('L'));
}

#[test]
fn unreadable_config_is_a_usage_error() {
    let out = leeyang(&["scan", "--config", "/nonexistent/run.toml"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn too_few_sizes_is_reported() {
    // The window lies beyond the last zero of every size.
    let text = r#"
[model]
kind = "XY"
L = 6
gamma = 0.8

[scan]
mode = "fss"
re_range = [1.045, 1.1]
im_range = [0.01, 0.6]
resolution = [5, 40]
L_list = [10, 12, 14, 16]

[output]
directory = "ignored"
"#;
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), text);
    let out_dir = dir.path().join("out");
    let out = leeyang(&["fss", "--config", &config, "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn verify_passes() {
    let out = leeyang(&["verify"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(stdout.lines().filter(|l| l.contains("PASS")).count(), 5, "{stdout}");
}
