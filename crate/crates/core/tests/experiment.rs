use std::path::Path;

use leeyang::experiment::output::{read_circle_csv, read_fss_csv, read_json, read_zeros_csv, table_digest};
use leeyang::experiment::{cmd_fss_with, cmd_scan, cmd_verify, ExperimentConfig, FssResult, RunSummary, SyntheticHl, VerifyOptions};
use leeyang::scan::{EdgeReport, FoldPoint, PlaneScan, ZeroSet};
use leeyang::{Complex64, Error};

const CIRCLE: &str = r#"
[model]
kind = "XY"
L = 8
gamma = 0.8

[scan]
mode = "circle"
g = [0.7, 1.5]

[output]
directory = "unused"
"#;

const GRID: &str = r#"
[model]
kind = "XXZ"
L = 6
Jx = -1.0
Jy = -1.0
Jz = 2.0
field_axis = "x"

[scan]
mode = "grid"
re_range = [0.5, 1.5]
im_range = [0.05, 1.0]
resolution = [5, 24]

[output]
directory = "unused"
"#;

const FSS: &str = r#"
[model]
kind = "XY"
L = 8
gamma = 0.8

[scan]
mode = "fss"
re_range = [0.9, 1.1]
im_range = [0.01, 0.5]
resolution = [3, 10]
L_list = [8, 10, 12, 14, 16, 18]

[output]
directory = "unused"
"#;

fn sorted_files(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    names
}

#[test]
fn repeated_runs_are_byte_identical() {
    for text in [CIRCLE, GRID] {
        let config = ExperimentConfig::from_toml_str(text).unwrap();
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        cmd_scan(&config, a.path()).unwrap();
        cmd_scan(&config, b.path()).unwrap();
        let names = sorted_files(a.path());
        assert_eq!(names, sorted_files(b.path()));
        for name in names.iter().filter(|n| *n != "manifest.json") {
            let x = std::fs::read(a.path().join(name)).unwrap();
            let y = std::fs::read(b.path().join(name)).unwrap();
            assert!(x == y, "{name} differs between runs");
        }
    }
}

#[test]
fn circle_outputs_read_back() {
    let config = ExperimentConfig::from_toml_str(CIRCLE).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let out = cmd_scan(&config, dir.path()).unwrap();
    let RunSummary::Circle(results) = &out.summary else { panic!("not a circle run") };
    assert_eq!(results.len(), 2);
    let digest = config.digest();
    for r in results {
        let tag = format!("{}", r.scan.g).replace('.', "p");
        let (header, samples) = read_circle_csv(&dir.path().join(format!("circle_g{tag}.csv"))).unwrap();
        assert_eq!(table_digest(&header).as_deref(), Some(digest.as_str()));
        assert!(header.iter().any(|l| l.starts_with("model.gamma")));
        assert_eq!(samples, r.scan.samples);
        let (_, zeros) = read_zeros_csv(&dir.path().join(format!("zeros_g{tag}.csv"))).unwrap();
        assert_eq!(zeros, r.zeros.zeros);
        let doc = read_json::<ZeroSet>(&dir.path().join(format!("zeros_g{tag}.json"))).unwrap();
        assert_eq!(doc.digest, digest);
        assert_eq!(doc.model, config.model);
        assert_eq!(&doc.payload, &r.zeros);
        let edge = read_json::<EdgeReport>(&dir.path().join(format!("edge_g{tag}.json"))).unwrap();
        assert_eq!(Some(&edge.payload), r.edge.as_ref());
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config_digest"], digest.as_str());
    assert_eq!(manifest["files"].as_array().unwrap().len(), out.files.len() - 1);
}

#[test]
fn grid_outputs_read_back() {
    let config = ExperimentConfig::from_toml_str(GRID).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let out = cmd_scan(&config, dir.path()).unwrap();
    let RunSummary::Grid(g) = &out.summary else { panic!("not a grid run") };
    let (_, zeros) = read_zeros_csv(&dir.path().join("grid_zeros.csv")).unwrap();
    assert_eq!(zeros, g.plane.zeros.zeros);
    assert_eq!(read_json::<PlaneScan>(&dir.path().join("grid.json")).unwrap().payload, g.plane);
    assert_eq!(read_json::<Option<FoldPoint>>(&dir.path().join("h_l.json")).unwrap().payload, g.h_l);
}

#[test]
fn synthetic_scaling_data_is_recovered() {
    let config = ExperimentConfig::from_toml_str(FSS).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let source = SyntheticHl {
        h_c: Complex64::new(1.005, 0.002),
        a: Complex64::new(0.4, 1.8),
        nu: 1.0,
    };
    let out = cmd_fss_with(&config, dir.path(), &source).unwrap();
    let RunSummary::Fss(f) = &out.summary else { panic!("not an fss run") };
    assert!((f.re.h_c - 1.005).abs() <= 1e-8 && (f.re.nu - 1.0).abs() <= 1e-6, "{:?}", f.re);
    assert!((f.im.h_c - 0.002).abs() <= 1e-8 && (f.im.nu - 1.0).abs() <= 1e-6, "{:?}", f.im);
    let joint = f.joint.as_ref().unwrap();
    assert!((joint.nu - 1.0).abs() <= 1e-6);

    let (_, rows) = read_fss_csv(&dir.path().join("fss_points.csv")).unwrap();
    assert_eq!(rows, f.points);
    assert_eq!(read_json::<FssResult>(&dir.path().join("fit.json")).unwrap().payload, *f);
    let report = std::fs::read_to_string(dir.path().join("fit.txt")).unwrap();
    assert!(report.contains("nu = 1.000000") && report.starts_with(&format!("# digest = \"{}\"", config.digest())));
}

#[test]
fn scaling_needs_four_sizes() {
    let mut config = ExperimentConfig::from_toml_str(FSS).unwrap();
    config.scan.l_list = vec![8, 10, 12];
    assert!(config.validate().unwrap_err().is_validation());
}

#[test]
fn unknown_keys_are_named() {
    let text = CIRCLE.replace("gamma = 0.8", "gamma = 0.8\ngama = 0.8");
    let err = ExperimentConfig::from_toml_str(&text).unwrap_err();
    assert!(matches!(err, Error::Config(_)) && err.to_string().contains("gama"), "{err}");
    let text = CIRCLE.replace("g = [0.7, 1.5]", "g = [0.7, 1.5]\nn_thta = 64");
    assert!(ExperimentConfig::from_toml_str(&text).unwrap_err().to_string().contains("n_thta"));
}

#[test]
fn config_round_trips_through_toml() {
    for text in [CIRCLE, GRID, FSS] {
        let config = ExperimentConfig::from_toml_str(text).unwrap();
        let again = ExperimentConfig::from_toml_str(&config.to_toml_string()).unwrap();
        assert_eq!(config.digest(), again.digest());
    }
}

#[test]
fn verify_catches_a_wrong_branch() {
    let good = cmd_verify(&VerifyOptions::default());
    assert!(good.all_passed(), "{}", good.matrix());
    let bad = cmd_verify(&VerifyOptions {
        corrupt_dispersion: true,
        ..VerifyOptions::default()
    });
    assert!(!bad.checks[0].passed, "{}", bad.matrix());
    assert!(bad.checks[1..].iter().all(|c| c.passed));
}
