use std::path::Path;
use std::process::{Command, Output};

use extinction_core::sir_cdf;
use serde_json::Value;
use tempfile::TempDir;

fn extinction(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_extinction"))
        .args(args)
        .env("EXTL_THREADS", "2")
        .output()
        .unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn rows(path: &Path) -> (String, Vec<Vec<f64>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let head = lines.next().unwrap().to_string();
    let body = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    (head, body)
}

const SMALL: &str = r#"{"model": {"peak_a": 0.132}, "solver": {"n": 8, "horizon": 60, "lambda_cutoff": 50}}"#;

#[test]
fn compare_writes_csv_and_summary() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "run.json", SMALL);
    let out = dir.path().join("cmp.csv");
    let o = extinction(&["compare", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let (head, body) = rows(&out);
    assert_eq!(head, "t,F_vi,F_markov");
    assert_eq!(body.len(), 481);
    let summary: Value = serde_json::from_str(&std::fs::read_to_string(out.with_extension("json")).unwrap()).unwrap();
    let (r, rho) = (summary["r_eff"].as_f64().unwrap(), summary["rho"].as_f64().unwrap());
    assert!((r - 0.66).abs() < 1e-9);
    for row in body.iter().step_by(37) {
        let expect = sir_cdf(r, rho, row[0]).unwrap();
        assert!((row[2] - expect).abs() < 1e-8 * expect.max(1e-3), "{row:?}");
        assert!((0.0..=1.0).contains(&row[1]));
    }
    assert_eq!(summary["M"], 1);
    assert!(summary["mean_vi"].as_f64().unwrap() > summary["mean_markov"].as_f64().unwrap());
    let keys: Vec<&String> = summary.as_object().unwrap().keys().collect();
    assert!(keys.windows(2).all(|w| w[0] < w[1]));

    // byte-identical on rerun
    let again = dir.path().join("again.csv");
    assert!(extinction(&["compare", "--config", &cfg, "--out", again.to_str().unwrap()]).status.success());
    assert_eq!(std::fs::read(&out).unwrap(), std::fs::read(&again).unwrap());
}

#[test]
fn cdf_of_fixed_duration_markov_chain() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "run.json",
        r#"{"model": {"family": "constant_rate", "lambda": 0.2, "eta": {"kind": "dirac", "a": 5}},
            "solver": {"n": 4, "horizon": 10}}"#,
    );
    let out = dir.path().join("cdf.csv");
    let o = extinction(&["cdf", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.lines().any(|l| l == "5,0.367879441"), "{text}");
}

#[test]
fn config_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "bad.json", "{\n  \"model\": {\n    \"peak\": 0.1\n  }\n}");
    let o = extinction(&["characteristics", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));

    let cfg = write(dir.path(), "ok.json", "{}");
    let o = extinction(&["characteristics", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2), "peak_a is required");
    let o = extinction(&["characteristics", "--config", &cfg, "--set", "model.peak_a=0.16"]);
    assert!(o.status.success());
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((v["r_eff"].as_f64().unwrap() - 0.8).abs() < 1e-12);
    assert_eq!(extinction(&["nonsense"]).status.code(), Some(2));
}

#[test]
fn simulate_and_lln_outputs() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "run.json",
        r#"{"model": {"peak_a": 0.132}, "solver": {"horizon": 40},
            "sim": {"replicates": 2000, "seed": 3, "t_step": 1}, "lln": {"horizon": 30, "step": 0.05}}"#,
    );
    let out = dir.path().join("sim.csv");
    let o = extinction(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (head, body) = rows(&out);
    assert_eq!(head, "t,p_hat,halfwidth");
    assert_eq!(body.len(), 41);
    assert!(body.windows(2).all(|w| w[1][1] >= w[0][1]));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["replicates"], 2000);
    assert_eq!(v["capped"], 0);

    let out = dir.path().join("lln.csv");
    let o = extinction(&["lln", "--config", &cfg, "--t0", "30", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (head, body) = rows(&out);
    assert_eq!(head, "t,s_bar,i_bar,r_bar,force");
    for r in &body {
        assert!((r[1] + r[2] + r[3] - 1.0).abs() < 1e-6);
    }
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    let s = v["s_bar_t0"].as_f64().unwrap();
    assert!(s < 0.999 && s > 0.99, "{s}");
}
