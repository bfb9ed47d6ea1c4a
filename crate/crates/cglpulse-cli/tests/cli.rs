use serde_json::Value;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn cglpulse(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cglpulse")).args(args).output().expect("binary runs")
}

fn text(b: &[u8]) -> String {
    String::from_utf8_lossy(b).into_owned()
}

#[test]
fn missing_model_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "[model]\nalpha = [0.5, 0.5]\nbeta = [-0.05, -13.2]\ndelta = [-0.05, 0.05]\n").unwrap();
    let out = cglpulse(&["pulse", "--config", path.to_str().unwrap(), "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains("model.gamma"), "{}", text(&out.stderr));
    assert!(!dir.path().join("manifest.json").exists());
}

#[test]
fn unknown_keys_and_bad_types_name_the_key() {
    let p1 = config("parameters1.toml");
    for key in ["ps.bogus", "pulse.bogus", "tails.bogus", "fit.bogus", "experiment.basin.bogus"] {
        let out = cglpulse(&["validate", "--config", p1.to_str().unwrap(), "--set", &format!("{key}=1")]);
        assert_eq!(out.status.code(), Some(2), "{key}");
        assert!(text(&out.stderr).contains(key), "{key}: {}", text(&out.stderr));
    }
    let out = cglpulse(&["validate", "--config", p1.to_str().unwrap(), "--set", "ps.m=\"many\""]);
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains("ps.m"));
}

#[test]
fn validate_suggests_a_boole_compatible_grid() {
    let p1 = config("parameters1.toml");
    let out = cglpulse(&["validate", "--json", "--config", p1.to_str().unwrap(), "--set", "ps.m=151"]);
    assert_eq!(out.status.code(), Some(0));
    let diags: Value = serde_json::from_slice(&out.stdout).unwrap();
    let d = &diags[0];
    assert_eq!(d["level"], "warning");
    assert_eq!(d["key"], "ps.m");
    assert!(d["message"].as_str().unwrap().contains("m = 152"));

    let out = cglpulse(&["validate", "--config", p1.to_str().unwrap(), "--set", "ps.m=40"]);
    assert_eq!(out.status.code(), Some(2), "dx·λ_r too large must be an error: {}", text(&out.stderr));
}

fn read_manifest(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn rerun_hits_the_cache_and_reproduces_outputs() {
    let work = tempfile::tempdir().unwrap();
    let p1 = config("parameters1.toml");
    let cache = work.path().join("cache");
    let run = |out: &Path| {
        let o = cglpulse(&[
            "two-pulse",
            "--config",
            p1.to_str().unwrap(),
            "--out-dir",
            out.to_str().unwrap(),
            "--mode",
            "pos",
            "--set",
            &format!("output.cache_dir=\"{}\"", cache.display()),
        ]);
        assert!(o.status.success(), "{}", text(&o.stderr));
        read_manifest(out)
    };
    let (a, b) = (work.path().join("a"), work.path().join("b"));
    let first = run(&a);
    let second = run(&b);
    assert!(first["cache"].as_array().unwrap().iter().all(|c| c["hit"] == false));
    assert!(second["cache"].as_array().unwrap().iter().all(|c| c["hit"] == true));
    let outputs = first["outputs"].as_array().unwrap();
    assert!(outputs.len() >= 2);
    for (x, y) in outputs.iter().zip(second["outputs"].as_array().unwrap()) {
        assert_eq!(x["sha256"], y["sha256"], "{}", x["path"]);
    }

    let ret: Value = serde_json::from_str(&std::fs::read_to_string(a.join("return.json")).unwrap()).unwrap();
    let period = ret["period"].as_f64().unwrap();
    assert!((period - 1835.92).abs() < 0.5, "{ret}");
    let csv = std::fs::read_to_string(a.join("trajectory.csv")).unwrap();
    assert!(csv.lines().next().unwrap().starts_with("t,x1,y1,g1,x2,y2,g2"));
}
