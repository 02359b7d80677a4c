use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn ergolab(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ergolab"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("cfg.toml");
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

/// Data rows of a CSV, skipping the schema comment and the header.
fn rows(path: &Path) -> Vec<Vec<String>> {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# ergolab-csv v1 "));
    let body = lines.collect::<Vec<_>>().join("\n");
    let mut r = csv::Reader::from_reader(body.as_bytes());
    r.records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect()
}

#[test]
fn lyapunov_on_cat_map() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "orbits = 10\nhorizon = 200\n");
    let out = ergolab(&["lyapunov", "--config", &cfg, "--out", "o"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r = rows(&tmp.path().join("o/lyapunov.csv"));
    let cu = r.iter().find(|r| r[0] == "cu").unwrap();
    let v: f64 = cu[1].parse().unwrap();
    assert!((v - 0.962_423_650_1).abs() < 1e-9);
    let m = manifest(&tmp.path().join("o"));
    assert_eq!(m["subcommand"], "lyapunov");
    assert_eq!(m["outputs"][0]["file"], "lyapunov.csv");
}

#[test]
fn identical_runs_are_byte_identical_across_worker_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "system = \"solenoid\"\nsamples = 2000\nn_max = 5\nbatches = 10\nburn_in = 20\nphi = \"re-z\"\n",
    );
    for (dir, workers) in [("a", "1"), ("b", "3")] {
        let out = ergolab(
            &["correlate", "--config", &cfg, "--seed", "9", "--out", dir, "--workers", workers],
            tmp.path(),
        );
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let a = fs::read(tmp.path().join("a/correlation.csv")).unwrap();
    let b = fs::read(tmp.path().join("b/correlation.csv")).unwrap();
    assert_eq!(a, b);
    assert_eq!(
        manifest(&tmp.path().join("a"))["outputs"],
        manifest(&tmp.path().join("b"))["outputs"]
    );
    assert_eq!(manifest(&tmp.path().join("a"))["seed"], 9);
}

#[test]
fn every_subcommand_writes_its_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let cases: &[(&str, &str, &[&str])] = &[
        ("orbit", "system = \"modified-solenoid\"\nhorizon = 50\n", &["orbit.csv"]),
        ("pliss", "system = \"intermittent-circle\"\nhorizon = 200\n", &["pliss.csv"]),
        ("hyptimes", "system = \"solenoid\"\nhorizon = 100\nc_s = 2.0\n", &["hyptimes.csv"]),
        ("tail", "system = \"intermittent-circle\"\nhorizon = 100\nsamples = 3000\n", &["tail.csv", "fits.csv"]),
        ("block", "system = \"solenoid\"\nsamples = 200\nhorizon = 256\nblock_js = [4, 8]\nburn_in = 16\n", &["block.csv"]),
        ("basin", "system = \"cat-map\"\nref_length = 10000\ncloud_size = 5000\ngrid_points = 16\nhorizon = 100\n", &["basin.csv"]),
        ("holonomy", "system = \"modified-solenoid\"\nholonomy_pairs = 5\n", &["holonomy.csv"]),
    ];
    for (cmd, text, files) in cases {
        let dir = tmp.path().join(cmd);
        fs::create_dir_all(&dir).unwrap();
        let cfg = write_config(&dir, text);
        let out = ergolab(&[cmd, "--config", &cfg, "--out", "o"], &dir);
        assert!(out.status.success(), "{cmd}: {}", String::from_utf8_lossy(&out.stderr));
        let m = manifest(&dir.join("o"));
        for (k, file) in files.iter().enumerate() {
            let bytes = fs::read(dir.join("o").join(file)).unwrap();
            let head = format!("# ergolab-csv v1 {}", if *file == "fits.csv" { "fits" } else { cmd });
            assert!(bytes.starts_with(head.as_bytes()), "{file}");
            assert_eq!(m["outputs"][k]["file"], *file);
            assert!(!rows(&dir.join("o").join(file)).is_empty());
        }
        assert!(!dir.join("o").read_dir().unwrap().any(|e| {
            e.unwrap().file_name().to_string_lossy().ends_with(".tmp")
        }));
    }
}

#[test]
fn tail_fit_columns() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "system = \"cat-map\"\nc_u = 0.96\nhorizon = 20\nsamples = 500\n");
    let out = ergolab(&["tail", "--config", &cfg, "--out", "o"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let fits = rows(&tmp.path().join("o/fits.csv"));
    assert_eq!(fits.len(), 1);
    assert_eq!(fits[0][0], "degenerate");
    let m = manifest(&tmp.path().join("o"));
    assert_eq!(m["summary"]["predicted_mixing_class"]["type"], "exponential");
}

#[test]
fn invalid_config_names_the_field_and_leaves_no_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    for (text, field) in [
        ("c_u = 0.99\n", "c_u"),
        ("samples = 0\n", "samples"),
        ("system = \"lorenz\"\n", "system"),
        ("horizon = \"long\"\n", "horizon"),
        ("sigma = 1.5\n", "sigma"),
    ] {
        let cfg = write_config(tmp.path(), text);
        let out = ergolab(&["orbit", "--config", &cfg, "--out", "o"], tmp.path());
        assert!(!out.status.success());
        let err = String::from_utf8_lossy(&out.stderr);
        assert!(err.contains("ConfigInvalid") && err.contains(field), "{err}");
        assert!(!tmp.path().join("o").exists());
    }
}

#[test]
fn failed_run_removes_partial_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    // holonomy on the torus fails after config validation
    let cfg = write_config(tmp.path(), "system = \"cat-map\"\n");
    let out = ergolab(&["holonomy", "--config", &cfg, "--out", "o"], tmp.path());
    assert!(!out.status.success());
    let leftover: Vec<_> = fs::read_dir(tmp.path().join("o"))
        .map(|d| d.map(|e| e.unwrap().file_name()).collect())
        .unwrap_or_default();
    assert!(leftover.is_empty(), "{leftover:?}");
}

#[test]
fn usage_errors_and_schema() {
    let tmp = tempfile::tempdir().unwrap();
    let out = ergolab(&["frobnicate"], tmp.path());
    assert!(!out.status.success());
    let out = ergolab(&[], tmp.path());
    assert!(!out.status.success());
    let out = ergolab(&["--print-schema"], tmp.path());
    assert!(out.status.success());
    let schema = String::from_utf8(out.stdout).unwrap();
    assert!(schema.contains("c_u = 0.5"));
    // the schema itself is a valid config
    let cfg = write_config(tmp.path(), &schema);
    let out = ergolab(&["orbit", "--config", &cfg, "--out", "o"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
