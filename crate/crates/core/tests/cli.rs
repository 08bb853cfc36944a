use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use skewevt::config::{load_config, parse_config};

fn skewevt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_skewevt"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn stdout_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

fn stderr_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stderr).unwrap()
}

fn small_evt(out_dir: &Path, n: u64) -> String {
    format!(
        r#"
seed = 5
out_dir = "{}"

[system]
kind = "circle-extension"
base = {{ kind = "linear-expanding", d = 2 }}
cocycle = {{ form = "trigonometric", amplitude = 0.5 }}

[experiment]
kind = "evt"
n = {n}
ensemble = 200
target = {{ sampled = {{}} }}
v_grid = [-1.0, 0.0, 1.0, 2.0]
radii = [0.1, 0.05]
"#,
        out_dir.display()
    )
}

#[test]
fn version_and_systems() {
    let v = skewevt(&["version"]);
    assert!(v.status.success());
    let text = String::from_utf8(v.stdout).unwrap();
    assert!(text.starts_with("skewevt "));
    assert!(text.contains("schema 1"));

    let l = skewevt(&["list-systems"]);
    assert!(l.status.success());
    let text = String::from_utf8(l.stdout).unwrap();
    for kind in ["linear-expanding", "circle-extension", "lsv", "gouezel", "viana"] {
        assert!(text.contains(kind), "missing {kind}");
    }
}

#[test]
fn bundled_configs_validate() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let out = skewevt(&["validate", path.to_str().unwrap()]);
        assert!(out.status.success(), "{}", path.display());
        assert_eq!(stdout_json(&out)["valid"], true);
    }
}

#[test]
fn validate_reports_alpha_profile_violation() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(
        dir.path(),
        "bad.toml",
        r#"
[system]
kind = "gouezel"
alpha_min = 0.2
alpha_max = 0.35

[experiment]
kind = "thresholds"
params = { gamma_prime = 0.1, kappa = 2.0 }
"#,
    );
    let out = skewevt(&["validate", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let report = stdout_json(&out);
    assert_eq!(report["valid"], false);
    let v = report["violations"].as_array().unwrap();
    assert!(v
        .iter()
        .any(|m| m.as_str().unwrap().contains("α_max < 1.5·α_min")));
}

#[test]
fn validate_checks_exponent_relations() {
    let dir = tempfile::tempdir().unwrap();
    let ok = write(
        dir.path(),
        "ok.toml",
        r#"
[system]
kind = "linear-expanding"
d = 2

[experiment]
kind = "thresholds"
params = { gamma_prime = 0.4, beta = 1.0, delta = 1.0, kappa = 2.0 }
"#,
    );
    let out = skewevt(&["validate", ok.to_str().unwrap()]);
    assert!(out.status.success());

    let bad = write(
        dir.path(),
        "bad.toml",
        r#"
[system]
kind = "linear-expanding"
d = 2

[experiment]
kind = "thresholds"
dimension = 2
params = { gamma_prime = 0.6, beta = 1.0, kappa = 2.0 }
"#,
    );
    let out = skewevt(&["validate", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let v = stdout_json(&out)["violations"].clone();
    assert_eq!(v.as_array().unwrap().len(), 1);
    assert!(v[0].as_str().unwrap().contains("γ′ < β/D"));
}

#[test]
fn validate_rejects_unknown_keys_and_missing_files() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(
        dir.path(),
        "typo.toml",
        "[system]\nkind = \"linear-expanding\"\nd = 2\nspeed = 3\n\n[experiment]\nkind = \"thresholds\"\nparams = { gamma_prime = 0.1, kappa = 2.0 }\n",
    );
    let out = skewevt(&["validate", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stdout_json(&out)["violations"][0]
        .as_str()
        .unwrap()
        .contains("speed"));

    let missing = dir.path().join("nope.toml");
    let out = skewevt(&["validate", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn degenerate_block_gives_valid_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let p = write(dir.path(), "n0.toml", &small_evt(&out_dir, 0));
    let out = skewevt(&["run", p.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let line = stdout_json(&out);
    let csv_path = line["csv"].as_str().unwrap();
    assert!(csv_path.ends_with("evt_seed5.csv"));

    let mut reader = csv::Reader::from_path(csv_path).unwrap();
    assert_eq!(
        reader.headers().unwrap(),
        vec!["v", "u_n", "empirical_cdf", "theoretical_cdf", "abs_diff"]
    );
    let mut last = 0.0;
    let mut rows = 0;
    for rec in reader.records() {
        let rec = rec.unwrap();
        let f: f64 = rec[2].parse().unwrap();
        assert!((0.0..=1.0).contains(&f) && f >= last);
        last = f;
        rows += 1;
    }
    assert_eq!(rows, 4);
}

#[test]
fn reruns_are_byte_identical_and_threads_do_not_matter() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let p = write(dir.path(), "evt.toml", &small_evt(&out_dir, 500));
    let mut seen = Vec::new();
    for threads in ["1", "2", "1"] {
        let out = skewevt(&["run", p.to_str().unwrap(), "--threads", threads]);
        assert!(out.status.success());
        seen.push((
            std::fs::read(out_dir.join("evt_seed5.csv")).unwrap(),
            std::fs::read(out_dir.join("evt_seed5.json")).unwrap(),
        ));
    }
    assert!(seen.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn overrides_change_names_and_location() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "evt.toml", &small_evt(&dir.path().join("a"), 100));
    let other = dir.path().join("b");
    let out = skewevt(&[
        "run",
        p.to_str().unwrap(),
        "--seed",
        "9",
        "--out-dir",
        other.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let json: serde_json::Value =
        serde_json::from_slice(&std::fs::read(other.join("evt_seed9.json")).unwrap()).unwrap();
    assert_eq!(json["schema_version"], 1);
    assert_eq!(json["seed"], 9);
    assert_eq!(json["config"]["seed"], 9);
    assert!(!dir.path().join("a").exists());
}

#[test]
fn resolved_config_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let p = write(dir.path(), "evt.toml", &small_evt(&out_dir, 100));
    assert!(skewevt(&["run", p.to_str().unwrap()]).status.success());
    let summary: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out_dir.join("evt_seed5.json")).unwrap()).unwrap();
    let echoed = serde_json::to_string(&summary["config"]).unwrap();
    let reparsed = parse_config(&echoed, true).unwrap();
    assert_eq!(reparsed, load_config(&p).unwrap().resolve().unwrap());
    assert_eq!(reparsed.resolve().unwrap(), reparsed);

    let json_path = write(dir.path(), "echo.json", &echoed);
    let out = skewevt(&["validate", json_path.to_str().unwrap()]);
    assert!(out.status.success());
}

#[test]
fn schema_errors_exit_2_with_record() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(
        dir.path(),
        "bad.toml",
        "[system]\nkind = \"lsv\"\nomega = 1.5\n\n[experiment]\nkind = \"thresholds\"\nparams = { gamma_prime = 0.1, kappa = 2.0 }\n",
    );
    let out = skewevt(&["run", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let rec = stderr_json(&out);
    assert_eq!(rec["error"]["exit_code"], 2);
    assert!(rec["error"]["message"].is_string());
}

#[test]
fn divergence_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(
        dir.path(),
        "viana.toml",
        &format!(
            r#"
out_dir = "{}"

[system]
kind = "viana"
a0 = 2.0
alpha = 0.5

[experiment]
kind = "evt"
n = 1000
ensemble = 100
target = {{ sampled = {{}} }}
v_grid = [0.0]
radii = [0.1]
"#,
            dir.path().join("out").display()
        ),
    );
    let out = skewevt(&["run", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    let kind = stderr_json(&out)["error"]["kind"].clone();
    assert!(kind == "too-many-diverged" || kind == "orbit-diverged");
}

#[test]
fn unwritable_output_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = write(dir.path(), "file", "not a directory");
    let p = write(dir.path(), "evt.toml", &small_evt(&blocker.join("sub"), 10));
    let out = skewevt(&["run", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));
    assert_eq!(stderr_json(&out)["error"]["kind"], "io");
}
