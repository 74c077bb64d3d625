use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

fn elasteig(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_elasteig"))
        .args(args)
        .env("RUST_LOG", "error")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, v: &Value) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, serde_json::to_string_pretty(v).unwrap()).unwrap();
    p
}

fn small_square() -> Value {
    json!({
        "geometry": {"kind": "unit_square"},
        "material": {"nu": 0.35, "rho": 1.0, "young": {"*": 1.0}},
        "family": "taylor_hood",
        "modes": [1, 2],
        "level": 6,
        "study": {"kind": "uniform", "levels": [4, 6, 8, 10]},
    })
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn run(args: &[&str], config: &Path, out: &Path) -> Output {
    let mut all: Vec<&str> = args.to_vec();
    all.push(config.to_str().unwrap());
    all.push("--out");
    all.push(out.to_str().unwrap());
    elasteig(&all)
}

#[test]
fn solve_writes_versioned_output_with_default_markers() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "sq.json", &small_square());
    let out = dir.path().join("out");
    let o = run(&["solve"], &cfg, &out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let doc = read_json(&out.join("eigenvalues.json"));
    assert_eq!(doc["schema_version"], json!(1));
    assert_eq!(doc["tool"]["version"], json!(env!("CARGO_PKG_VERSION")));
    assert_eq!(doc["status"], json!("ok"));
    assert_eq!(doc["config"]["eigen"]["k"], json!({"value": 6, "defaulted": true}));
    assert_eq!(doc["config"]["family"], json!("taylor_hood"));
    let modes = doc["modes"].as_array().unwrap();
    assert_eq!(modes.len(), 6);
    let f: Vec<f64> = modes.iter().map(|m| m["frequency"].as_f64().unwrap()).collect();
    assert!(f.windows(2).all(|w| w[0] <= w[1]));
    let k = modes[0]["kappa"].as_f64().unwrap();
    let kh = modes[0]["kappa_hat"].as_f64().unwrap();
    assert!((k / kh - 1.35).abs() < 1e-12);
}

#[test]
fn echo_is_a_valid_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "sq.json", &small_square());
    let out = dir.path().join("a");
    assert!(run(&["solve"], &cfg, &out).status.success());
    let echo = read_json(&out.join("eigenvalues.json"))["config"].clone();
    let again = write_config(dir.path(), "echo.json", &echo);
    let out2 = dir.path().join("b");
    assert!(run(&["solve"], &again, &out2).status.success());
    let a = read_json(&out.join("eigenvalues.json"))["modes"].clone();
    let b = read_json(&out2.join("eigenvalues.json"))["modes"].clone();
    assert_eq!(a, b);
}

#[test]
fn study_writes_history_table_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "sq.json", &small_square());
    let out = dir.path().join("out");
    let o = run(&["study", "--threads", "1"], &cfg, &out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["history.csv", "history.json", "table.csv", "plot.csv"] {
        assert!(out.join(f).is_file(), "{f} missing");
    }
    let doc = read_json(&out.join("history.json"));
    assert_eq!(doc["schema_version"], json!(1));
    assert_eq!(doc["cli"]["threads"], json!(1));
    let records = doc["histories"][0]["history"]["records"].as_array().unwrap();
    assert_eq!(records.len(), 4);
    let table = std::fs::read_to_string(out.join("table.csv")).unwrap();
    assert!(table.starts_with("digits,4\nblock,mode,level,dofs,h,value,order,extrapolated,reference\n"));
    assert_eq!(table.lines().count(), 2 + 2 * 4);
    let plot = std::fs::read_to_string(out.join("plot.csv")).unwrap();
    assert!(plot.starts_with("dof,err,eta_sq,eff,slope_066,slope_1\n"));
}

#[test]
fn single_thread_runs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let mut v = small_square();
    v["study"] = json!({"kind": "adaptive", "initial_level": 4, "max_iterations": 3});
    let cfg = write_config(dir.path(), "ad.json", &v);
    let mut runs = Vec::new();
    for name in ["a", "b"] {
        let out = dir.path().join(name);
        assert!(run(&["study", "--threads", "1", "--seed", "11"], &cfg, &out).status.success());
        let mut doc = read_json(&out.join("history.json"));
        for r in doc["histories"][0]["history"]["records"].as_array_mut().unwrap() {
            r["wall_time_s"] = json!(0);
        }
        runs.push(doc["histories"].clone());
    }
    assert_eq!(runs[0], runs[1]);
}

#[test]
fn config_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        (json!({"material": {"nu": 0.7, "young": {"*": 1.0}}}), "poisson ratio out of range"),
        (json!({"geometry": {"kind": "file", "path": "missing/mesh.msh"}}), "mesh file not found"),
        (
            json!({"geometry": {"kind": "unit_square", "sides": {"bottom": "dirichlet", "right": "dirichlet", "top": "dirichlet", "left": "dirichlet"}},
                   "material": {"nu": 0.5, "young": {"*": 1.0}}}),
            "pressure nonunique",
        ),
    ];
    for (i, (patch, needle)) in cases.into_iter().enumerate() {
        let mut v = small_square();
        for (k, val) in patch.as_object().unwrap() {
            v[k] = val.clone();
        }
        let cfg = write_config(dir.path(), &format!("bad{i}.json"), &v);
        let o = run(&["solve"], &cfg, &dir.path().join("out"));
        let stderr = String::from_utf8_lossy(&o.stderr);
        assert_eq!(o.status.code(), Some(1), "{stderr}");
        assert!(stderr.contains(needle), "{stderr} should mention {needle}");
    }
    let o = elasteig(&["solve", dir.path().join("absent.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(elasteig(&["frobnicate"]).status.code(), Some(1));
}

#[test]
fn solver_failure_exits_2_with_partial_output() {
    let dir = tempfile::tempdir().unwrap();
    let mut v = small_square();
    v["eigen"] = json!({"tol": 1e-300, "max_restarts": 1});
    let cfg = write_config(dir.path(), "hard.json", &v);
    let out = dir.path().join("out");
    let o = run(&["solve"], &cfg, &out);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    let doc = read_json(&out.join("eigenvalues.json"));
    assert_eq!(doc["status"], json!("failed"));
    assert!(doc["error"].as_str().unwrap().contains("did not converge"));
}

#[test]
fn verify_passes_and_detects_faults() {
    let o = elasteig(&["verify", "--threads", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let o = elasteig(&["verify", "--inject-fault", "assembly"]);
    assert_eq!(o.status.code(), Some(3));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("FAIL matrix symmetry"), "{stdout}");
}

#[test]
fn bundled_configs_load() {
    let configs = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for entry in std::fs::read_dir(&configs).unwrap() {
        let path = entry.unwrap().path();
        let v = read_json(&path);
        assert!(v.get("schema_version").is_some(), "{}", path.display());
        n += 1;
    }
    assert!(n >= 6);
    // the quickest bundled config runs end to end
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["solve"], &configs.join("square_solve.json"), dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("indicators.csv").is_file());
}
