use serde_json::Value;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const WORKED: &str = "[domain]\ndelta0 = pi/6\ndelta1 = pi/6\n[physics]\nk1 = 1\nk2 = 0.5\ns_star = 3.5\nalpha0 = 0\nalpha1 = 0\n\
[corner]\na2 = 1.7320508075688772\nk = 0.5\nq = 1\np = 3\n[symbol]\ntruncation = 200\npoints = 3\n";

fn muskat(dir: &Path, cfg: &str, args: &[&str]) -> Output {
    let path = dir.join("run.cfg");
    fs::write(&path, cfg).unwrap();
    Command::new(env!("CARGO_BIN_EXE_muskat"))
        .args(args)
        .arg("--config")
        .arg(&path)
        .arg("--out")
        .arg(dir.join("out"))
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json(path: impl AsRef<Path>) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn missing_key_is_named_and_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = WORKED.replace("k2 = 0.5\n", "");
    let o = muskat(dir.path(), &cfg, &["spectrum"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("physics.k2"), "{}", stderr(&o));
    let m = json(dir.path().join("out/spectrum.manifest.json"));
    assert_eq!(m["outcome"], "validation_failure");
    assert!(m["config_errors"][0].as_str().unwrap().contains("physics.k2"));
}

#[test]
fn swapped_conductivities_exit_2_naming_k() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = WORKED.replace("k1 = 1", "k1 = 0.5").replace("k2 = 0.5", "k2 = 1");
    let o = muskat(dir.path(), &cfg, &["solve-initial"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("k = k2/k1 = 2"), "{}", stderr(&o));
    let m = json(dir.path().join("out/solve-initial.manifest.json"));
    let h4 = m["verdicts"].as_array().unwrap().iter().find(|v| v["step"] == "h4").unwrap();
    assert_eq!(h4["status"], "fail");
    assert_eq!(h4["quantities"]["k"], 2.0);
}

#[test]
fn wide_contact_angle_fails_window_precondition() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = WORKED.replace("delta0 = pi/6", "delta0 = 0.3*pi").replace("[corner]\na2 = 1.7320508075688772\nk = 0.5\nq = 1\np = 3\n", "");
    let o = muskat(dir.path(), &cfg, &["weights"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("precondition"), "{}", stderr(&o));
}

#[test]
fn worked_spectrum_writes_zero_tables() {
    let dir = tempfile::tempdir().unwrap();
    let o = muskat(dir.path(), WORKED, &["spectrum"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = dir.path().join("out");
    let s = json(out.join("spectrum.json"));
    for kind in ["minus", "plus"] {
        let z = &s["corners"][0]["zeros"][kind];
        assert_eq!(z["total_count"], 6);
        assert_eq!(z["counts_agree"], true);
        let csv = fs::read_to_string(out.join(format!("zeros_model_{kind}.csv"))).unwrap();
        assert!(csv.starts_with("kind,index,location,multiplicity,residual"));
        assert_eq!(csv.lines().count(), 7);
    }
    let m = json(out.join("spectrum.manifest.json"));
    assert_eq!(m["exit_code"], 0);
    assert_eq!(m["config"]["corner.p"], "3");
}

#[test]
fn outputs_and_report_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    assert_eq!(muskat(dir.path(), WORKED, &["spectrum"]).status.code(), Some(0));
    let first = fs::read(out.join("zeros_model_plus.csv")).unwrap();
    assert_eq!(muskat(dir.path(), WORKED, &["spectrum"]).status.code(), Some(0));
    assert_eq!(first, fs::read(out.join("zeros_model_plus.csv")).unwrap());

    assert_eq!(muskat(dir.path(), WORKED, &["report"]).status.code(), Some(0));
    let r1 = fs::read(out.join("report.json")).unwrap();
    assert_eq!(muskat(dir.path(), WORKED, &["report"]).status.code(), Some(0));
    assert_eq!(r1, fs::read(out.join("report.json")).unwrap());
    let r = json(out.join("report.json"));
    assert_eq!(r["runs"]["spectrum"]["outcome"], "ok");
    assert!(r["files"].get("report.manifest.json").is_none());
}

#[test]
fn symbol_residuals_follow_the_seed() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("out/symbol_residuals.csv");
    let run = |seed: &str| {
        let o = muskat(dir.path(), WORKED, &["symbol", "--seed", seed]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        fs::read_to_string(&csv).unwrap()
    };
    let (a, b, c) = (run("1"), run("1"), run("2"));
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert_eq!(a.lines().count(), 1 + 2 * 3);
    let s = json(dir.path().join("out/symbol.json"));
    assert!(s["g_identity"]["max_relative_difference"].as_f64().unwrap() < 1e-10);
    assert!(s["v0"]["max_residual"].as_f64().unwrap() < 1e-9);
}

#[test]
fn empty_window_blocks_unless_overridden_or_forced() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = muskat(dir.path(), WORKED, &["weights"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.join("weights.json").exists());

    let o = muskat(dir.path(), WORKED, &["weights", "--force"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let w = json(out.join("weights.json"));
    assert_eq!(w["window_s"]["empty"], true);
    assert!((w["window_s_plus_2"]["lower"].as_f64().unwrap() - 6.6029).abs() < 1e-3);

    let o = muskat(dir.path(), &format!("{WORKED}[overrides]\nh7 = true\n"), &["weights"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let m = json(out.join("weights.manifest.json"));
    assert!(!m["warnings"].as_array().unwrap().is_empty());
    assert_eq!(m["forced"], false);
}

#[test]
fn h4_failure_gates_solve_initial() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = muskat(dir.path(), WORKED, &["solve-initial"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("normal derivative"), "{}", stderr(&o));

    let o = muskat(dir.path(), &format!("{WORKED}[overrides]\nh4 = true\n"), &["solve-initial"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let s = json(out.join("solve_initial.json"));
    assert_eq!(s["max_principle"]["holds"], true);
    assert!(s["solve"]["relative_residual"].as_f64().unwrap() < 1e-8);
    for f in ["nodes.csv", "interface.csv", "mesh.txt", "coefficients.csv"] {
        assert!(out.join(f).exists(), "{f}");
    }
}

#[test]
fn bad_usage_is_rejected() {
    let o = Command::new(env!("CARGO_BIN_EXE_muskat")).arg("frobnicate").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_muskat")).args(["spectrum", "--out"]).arg(dir.path()).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--config"));
}
