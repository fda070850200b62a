use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn mopkit(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mopkit")).args(args).arg("--out").arg(out).output().unwrap()
}

fn scratch(tag: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("mopkit-cli-{}-{tag}", std::process::id()));
    let _ = fs::remove_dir_all(&d);
    d
}

fn write_spec(tag: &str, body: &str) -> PathBuf {
    let f = std::env::temp_dir().join(format!("mopkit-cli-{}-{tag}.json", std::process::id()));
    fs::write(&f, body).unwrap();
    f
}

#[test]
fn malformed_spec_exits_2_without_artifacts() {
    let out = scratch("bad");
    let spec = write_spec("bad", "{\"name\": \"x\", \"N\": ");
    let o = mopkit(&["compute", "--spec", spec.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
    let o = mopkit(&["verify", "--spec", "builtin:no-such-weight"], &out);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn singular_moments_exit_3() {
    // 1/z on the unit circle: only omega_0 is nonzero.
    let out = scratch("sing");
    let spec = write_spec(
        "sing",
        r#"{"name": "inv", "class": "custom", "N": 1, "support": {"kind": "circle", "center": [0, 0], "radius": 1},
            "phi": [0, 1], "hL": [[[-1]]], "anchor": {"z0": [1, 0], "value": [[1]]}}"#,
    );
    let o = mopkit(&["compute", "--spec", spec.to_str().unwrap(), "--nmax", "2"], &out);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("n = 1"));
    assert!(!out.exists());
}

#[test]
fn failing_checks_exit_5() {
    let out = scratch("tight");
    let o = mopkit(&["verify", "--spec", "builtin:hermite-scalar", "--nmax", "2", "--suite", "rh", "--tol", "1e-30"], &out);
    assert_eq!(o.status.code(), Some(5));
    assert!(String::from_utf8_lossy(&o.stderr).contains("failed"));
    let _ = fs::remove_dir_all(&out);
}

#[test]
fn compute_writes_hermite_tables() {
    let out = scratch("compute");
    let o = mopkit(&["compute", "--spec", "builtin:hermite-scalar", "--nmax", "8"], &out);
    assert_eq!(o.status.code(), Some(0));
    for f in ["moments.csv", "recurrence.csv", "coefficients.csv", "pipeline.json", "metadata.json"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let text = fs::read_to_string(out.join("recurrence.csv")).unwrap();
    let mut rows = 0;
    for line in text.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        let n: f64 = cols[1].parse().unwrap();
        let g: f64 = cols[6].parse().unwrap();
        assert!((g - n / 2.0).abs() < 1e-8);
        rows += 1;
    }
    assert_eq!(rows, 18);
    let _ = fs::remove_dir_all(&out);
}

#[test]
fn one_suite_one_report() {
    let out = scratch("zc");
    let o = mopkit(&["verify", "--spec", "builtin:hermite-scalar", "--nmax", "3", "--suite", "zero-curvature", "--json"], &out);
    assert_eq!(o.status.code(), Some(0));
    let mut names: Vec<String> = fs::read_dir(&out).unwrap().map(|e| e.unwrap().file_name().to_string_lossy().into_owned()).collect();
    names.sort();
    assert_eq!(names, ["metadata.json", "zero-curvature.json"]);
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("zero-curvature.json")).unwrap()).unwrap();
    assert_eq!(v["schema"], "mopkit/1");
    assert_eq!(v["pass"], true);
    let _ = fs::remove_dir_all(&out);
}

#[test]
fn nilpotent_painleve_lists_resolutions() {
    let out = scratch("pv");
    let o = mopkit(&["verify", "--spec", "builtin:hermite-nilpotent", "--nmax", "4", "--suite", "painleve", "--json"], &out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("painleve.json")).unwrap()).unwrap();
    let notes = v["notes"].as_array().unwrap();
    assert!(notes.iter().any(|n| n.as_str().unwrap().starts_with("resolution:")));
    let _ = fs::remove_dir_all(&out);
}

#[test]
fn jump_in_periodic_weight_exits_4() {
    // z^2.5 on the unit circle jumps across the ray through the anchor.
    let out = scratch("quad");
    let spec = write_spec(
        "quad",
        r#"{"name": "cut", "class": "custom", "N": 1, "support": {"kind": "circle", "center": [0, 0], "radius": 1},
            "phi": [0, 1], "hL": [[[2.5]]], "anchor": {"z0": [1, 0], "value": [[1]]}}"#,
    );
    let o = mopkit(&["compute", "--spec", spec.to_str().unwrap(), "--nmax", "2"], &out);
    assert_eq!(o.status.code(), Some(4));
    assert!(!out.exists());
}

#[test]
fn pearson_file_on_the_real_line() {
    // W = (I + A x) exp(-x^2) with A nilpotent, given only through its Pearson data.
    let out = scratch("file");
    let spec = write_spec(
        "file",
        r#"{"name": "nilpotent-gaussian", "class": "quadratic-hermite", "N": 2, "support": {"kind": "real-line"},
            "phi": [1], "hL": [[[0, 1], [0, 0]], [[-2, 0], [0, -2]]], "anchor": {"z0": 0, "value": [[1, 0], [0, 1]]}}"#,
    );
    let o = mopkit(&["verify", "--spec", spec.to_str().unwrap(), "--nmax", "3", "--suite", "recurrence,painleve"], &out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let _ = fs::remove_dir_all(&out);
}
