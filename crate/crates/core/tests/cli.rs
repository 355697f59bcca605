use std::fs;
use std::path::Path;
use std::process::Command;

use serde_json::Value;

fn run(command: &str, config: &str, out: &Path, extra: &[&str]) -> (i32, String) {
    let cfg = out.with_extension("json");
    fs::write(&cfg, config).unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_semidirac"))
        .arg(command)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .unwrap();
    (o.status.code().unwrap(), String::from_utf8_lossy(&o.stderr).into_owned())
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

fn entries(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    v.sort();
    v
}

const DOS: &str = r#"{"model": {"variant": "AnisotropicHoneycomb", "beta1": 1.4}, "grid": {"N1": 48, "N2": 48}, "numeric": {"n_bins": 40}}"#;

#[test]
fn dos_run_writes_csv_config_and_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("dos");
    let (code, _) = run("dos", DOS, &out, &["--threads", "2"]);
    assert_eq!(code, 0);
    assert_eq!(entries(&out), ["dos.csv", "manifest.json", "resolved_config.json"]);
    let m = manifest(&out);
    assert_eq!(m["status"], "ok");
    assert_eq!(m["threads"], 2);
    assert!((m["diagnostics"]["integral"].as_f64().unwrap() - 2.0).abs() < 1e-12);

    let csv = fs::read_to_string(out.join("dos.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("E_over_J1,D"));
    let first = lines.next().unwrap().split(',').next().unwrap().to_string();
    let mantissa = first.trim_start_matches('-').split('e').next().unwrap();
    assert_eq!(mantissa.chars().filter(char::is_ascii_digit).count(), 17);
    assert_eq!(csv.lines().count(), 41);
}

#[test]
fn resolved_config_reproduces_the_run() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    assert_eq!(run("dos", DOS, &a, &[]).0, 0);
    let resolved = fs::read_to_string(a.join("resolved_config.json")).unwrap();
    let b = tmp.path().join("b");
    assert_eq!(run("dos", &resolved, &b, &[]).0, 0);
    assert_eq!(fs::read(a.join("dos.csv")).unwrap(), fs::read(b.join("dos.csv")).unwrap());
    let strip = |text: &str| {
        let mut v: Value = serde_json::from_str(text).unwrap();
        v["output"].as_object_mut().unwrap().remove("directory");
        v
    };
    assert_eq!(strip(&resolved), strip(&fs::read_to_string(b.join("resolved_config.json")).unwrap()));
}

fn expect_failure(command: &str, config: &str, code: i32, kind: &str) -> Value {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let (c, stderr) = run(command, config, &out, &[]);
    assert_eq!(c, code, "{stderr}");
    assert_eq!(stderr.lines().count(), 1, "{stderr}");
    assert!(stderr.starts_with("error: "));
    assert_eq!(entries(&out), ["manifest.json"]);
    let m = manifest(&out);
    assert_eq!(m["status"], "error");
    assert_eq!(m["error"]["kind"], kind);
    assert_eq!(m["error"]["exit_code"], code);
    m
}

#[test]
fn unknown_key_is_a_schema_error() {
    let m = expect_failure(
        "dos",
        r#"{"model": {"variant": "AnisotropicHoneycomb", "beta3": 1}}"#,
        2,
        "SchemaError",
    );
    assert!(m["error"]["message"].as_str().unwrap().contains("model"));
}

#[test]
fn out_of_range_field_is_named() {
    let m = expect_failure(
        "dos",
        r#"{"model": {"variant": "AnisotropicHoneycomb", "beta1": -0.5}}"#,
        2,
        "RangeError",
    );
    assert!(m["error"]["message"].as_str().unwrap().contains("model.beta1"));
}

#[test]
fn mismatched_command_is_rejected() {
    expect_failure(
        "dos",
        r#"{"command": "bands", "model": {"variant": "AnisotropicHoneycomb"}}"#,
        2,
        "SchemaError",
    );
}

#[test]
fn oversized_step_is_rejected() {
    expect_failure(
        "dynamics",
        r#"{"model": {"variant": "Mizoguchi"}, "grid": {"N1": 8, "N2": 8}, "numeric": {"dt": 0.5}}"#,
        2,
        "RangeError",
    );
}

#[test]
fn ambiguous_crossing_is_a_convergence_failure() {
    expect_failure(
        "classify",
        r#"{"model": {"variant": "AnisotropicHoneycomb", "beta1": 1.0}, "numeric": {"k_star": [2.1443951023931953, -2.0943951023931953]}}"#,
        3,
        "AmbiguousError",
    );
}

#[test]
fn pole_on_grid_is_a_numeric_failure() {
    expect_failure(
        "selfenergy",
        r#"{"model": {"variant": "AnisotropicHoneycomb", "beta1": 2.0}, "grid": {"N1": 32, "N2": 32}, "numeric": {"eta": 0, "energies": [0]}}"#,
        4,
        "PoleError",
    );
}

#[test]
fn zero_threads_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let (code, _) = run("dos", DOS, &out, &["--threads", "0"]);
    assert_eq!(code, 2);
    assert_eq!(entries(&out), ["manifest.json"]);
}

#[test]
fn radiation_writes_one_map_per_snapshot() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("rad");
    let cfg = r#"{"model": {"variant": "AnisotropicHoneycomb", "J2": 0.1, "beta2": 6}, "grid": {"N1": 20, "N2": 20},
                 "emitters": {"delta": 0.8}, "numeric": {"t_max": 3, "snapshot_times": [1, 3]}}"#;
    assert_eq!(run("radiation", cfg, &out, &[]).0, 0);
    assert_eq!(
        entries(&out),
        ["emitter.csv", "manifest.json", "resolved_config.json", "snapshot_000.csv", "snapshot_001.csv"]
    );
    let snap = fs::read_to_string(out.join("snapshot_001.csv")).unwrap();
    assert_eq!(snap.lines().count(), 1 + 400);
    let m = manifest(&out);
    assert!(m["diagnostics"]["norm_drift"].as_f64().unwrap() < 1e-8);
}

#[test]
fn array_bands_reports_certification() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("arr");
    let cfg = r#"{"model": {"variant": "DipoleArray", "d": 0.15, "beta": 1.0}, "path": {"labels": ["K", "M"], "points_per_segment": 4}}"#;
    assert_eq!(run("array-bands", cfg, &out, &[]).0, 0);
    let m = manifest(&out);
    assert_eq!(m["diagnostics"]["certified_points"], 5);
    assert!(m["diagnostics"]["max_doubling_change"].as_f64().unwrap() < 1e-2);
    let csv = fs::read_to_string(out.join("bands.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 5 * 6);
}
