use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn vacneg(args: &[&str]) -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_vacneg"));
    c.args(args).env_remove("VACNEG_DIGITS");
    c
}

fn run(args: &[&str]) -> (i32, Value) {
    summary(vacneg(args).output().unwrap())
}

fn summary(out: Output) -> (i32, Value) {
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(stdout.lines().count(), 1, "summary must be one line: {stdout}");
    (out.status.code().unwrap(), serde_json::from_str(&stdout).unwrap())
}

fn num(v: &Value) -> f64 {
    v.as_str().unwrap().parse().unwrap()
}

#[test]
fn neg_lattice_native() {
    let (code, s) = run(&["neg", "--d", "8", "--r", "4", "--m", "0.5"]);
    assert_eq!(code, 0);
    assert!(num(&s["N_bits"]) > 0.0);
    assert_eq!(s["verdict"], "entangled");
}

#[test]
fn neg_physical_deep_separable() {
    let (code, s) = run(&["neg", "--md", "1", "--mrt", "40", "--d", "8"]);
    assert_eq!(code, 0);
    assert_eq!(s["verdict"], "separable");
    assert_eq!(s["r_tilde"], 320);
    assert_eq!(s["m"], "0.125");
}

#[test]
fn corr_large_mass() {
    let (code, s) = run(&["corr", "--n", "0", "--m", "1e6"]);
    assert_eq!(code, 0);
    let phi = num(&s["phi"]);
    assert!((phi * 1e6 - 1.0).abs() < 1e-9);
}

#[test]
fn validate_missing_mass() {
    let (code, s) = run(&["validate", "--for", "neg", "--d", "8", "--r", "4"]);
    assert_eq!(code, 1);
    let v = s["violations"].as_array().unwrap();
    assert_eq!(v.len(), 1);
    assert_eq!(v[0]["field"], "m");
}

#[test]
fn validate_digit_bounds() {
    let (_, s) = run(&["validate", "--for", "neg", "--d", "8", "--r", "4", "--m", "1", "--digits", "1000000"]);
    let v = s["violations"].as_array().unwrap();
    assert_eq!(v.len(), 1);
    assert_eq!(v[0]["field"], "target_digits");
}

#[test]
fn validate_profile_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("profile.json");
    std::fs::write(
        &cfg,
        r#"{"subcommand": "profile", "d": 40, "r_tilde": 40, "m": "0.025", "target_digits": 60, "profiles_out": "p.csv"}"#,
    )
    .unwrap();
    let (code, s) = run(&["validate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_eq!(s["violations"].as_array().unwrap().len(), 0);
    assert_eq!(s["for"], "profile");
}

#[test]
fn validate_rejects_unknown_file_keys_and_mixed_specs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"d": 4, "colour": 1}"#).unwrap();
    let (code, s) = run(&["validate", "--for", "neg", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert_eq!(s["violations"][0]["field"], "config");

    let (_, s) = run(&["validate", "--for", "neg", "--d", "4", "--m", "1", "--mrt", "2"]);
    assert_eq!(s["violations"][0]["field"], "spec");
}

#[test]
fn flags_override_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("neg.json");
    std::fs::write(&cfg, r#"{"d": 2, "r_tilde": 1, "m": 1e-3, "target_digits": 20}"#).unwrap();
    let (code, s) = run(&["neg", "--config", cfg.to_str().unwrap(), "--m", "10"]);
    assert_eq!(code, 0);
    assert_eq!(s["m"], "10");
    assert_eq!(s["target_digits"], 20);
    let (_, s) = run(&["neg", "--config", cfg.to_str().unwrap()]);
    assert_eq!(s["m"], "0.001");
}

#[test]
fn env_sets_default_digits() {
    let out = vacneg(&["neg", "--d", "2", "--r", "1", "--m", "1"]).env("VACNEG_DIGITS", "40").output().unwrap();
    let (_, s) = summary(out);
    assert_eq!(s["target_digits"], 40);
    let out = vacneg(&["neg", "--d", "2", "--r", "1", "--m", "1", "--digits", "24"])
        .env("VACNEG_DIGITS", "40")
        .output()
        .unwrap();
    assert_eq!(summary(out).1["target_digits"], 24);
}

#[test]
fn errors_exit_one_with_json() {
    // a separable configuration has nothing to consolidate
    let (code, s) = run(&["consolidate", "--d", "1", "--r", "1", "--m", "1"]);
    assert_eq!(code, 1);
    assert_eq!(s["status"], "error");
    assert!(s["error"].as_str().unwrap().contains("entangled"));
}

fn bytes(p: &Path) -> Vec<u8> {
    std::fs::read(p).unwrap()
}

#[test]
fn artifacts_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let grid = ["--md-list", "0.5,1", "--mrt-list", "0.25,1", "--d", "8"];
    let mut paths = Vec::new();
    for (name, extra) in [("a.csv", None), ("b.csv", Some("--sequential")), ("c.json", None), ("d.json", Some("--jobs=1"))] {
        let p = dir.path().join(name);
        let mut args = vec!["heatmap"];
        args.extend(grid);
        args.extend(["--out", p.to_str().unwrap()]);
        args.extend(extra);
        let (code, s) = run(&args);
        assert_eq!(code, 0, "{s}");
        assert_eq!(s["points"], 4);
        paths.push(p);
    }
    assert_eq!(bytes(&paths[0]), bytes(&paths[1]));
    assert_eq!(bytes(&paths[2]), bytes(&paths[3]));
    assert_eq!(std::fs::read_to_string(&paths[0]).unwrap().lines().count(), 5);

    for cmd in ["profile", "swap", "consolidate", "spectrum"] {
        let (a, b) = (dir.path().join(format!("{cmd}1.json")), dir.path().join(format!("{cmd}2.json")));
        for p in [&a, &b] {
            let (code, _) = run(&[cmd, "--d", "4", "--r", "1", "--m", "0.01", "--out", p.to_str().unwrap()]);
            assert_eq!(code, 0);
        }
        assert_eq!(bytes(&a), bytes(&b), "{cmd}");
    }
}

#[test]
fn heatmap_resumes_from_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("h.csv");
    let man = dir.path().join("h.manifest");
    let args = |mrt: &'static str| {
        vec![
            "heatmap".to_string(),
            "--md-list=1".into(),
            format!("--mrt-list={mrt}"),
            "--d=6".into(),
            format!("--out={}", out.display()),
            format!("--manifest={}", man.display()),
        ]
    };
    let run_owned = |a: Vec<String>| {
        let refs: Vec<&str> = a.iter().map(String::as_str).collect();
        run(&refs)
    };
    let (_, s) = run_owned(args("0.5,1"));
    assert_eq!(s["points"], 2);
    let (_, s) = run_owned(args("0.5,1,1.5"));
    assert_eq!(s["points"], 1);
    assert_eq!(s["resumed"], 2);
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 4);
    assert_eq!(text.matches("N_bits").count(), 1);
}

#[test]
fn sphere_and_profile_export() {
    let (code, s) = run(&["sphere", "--d", "3", "--m", "1"]);
    assert_eq!(code, 0);
    assert!(s["radius"]["exact"].as_u64().unwrap() >= 2);

    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("prof.json");
    let (code, s) = run(&["profile", "--d", "3", "--r", "1", "--m", "0.01", "--profiles-out", p.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(num(&s["extracted_N_bits"]) <= num(&s["total_N_bits"]));
    let v: Value = serde_json::from_slice(&bytes(&p)).unwrap();
    assert!(v.is_object());
}

#[test]
fn help_lists_all_subcommands() {
    let out = vacneg(&["--help"]).output().unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    for c in [
        "corr", "cm", "spectrum", "neg", "consolidate", "profile", "swap", "sphere", "heatmap", "scan-min", "scan-decay",
        "sphere-growth", "validate",
    ] {
        assert!(text.contains(c), "{c}");
    }
}
