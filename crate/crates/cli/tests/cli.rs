use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_depbandits"))
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).env_remove("DEPBANDITS_THREADS").output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const TWO_GAUSSIANS: &str = r#"schema_version = 1
kappa = 2.0

[experiment]
policies = ["ucb_d", "vanilla_ucb"]
horizon = 300
replications = 3
seed = 5

[instance]
arms = [
  { family = "gaussian_scaled", scale = 1.0, sigma = 1.0 },
  { family = "gaussian_scaled", scale = 2.0, sigma = 1.0 },
]

[[instance.clusters]]
arms = [0, 1]
theta = [0.3]
space = { kind = "interval", lower = 0.0, upper = 1.0 }
"#;

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

#[test]
fn simulate_overrides_are_recorded() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("sim");
    let cfg = configs().join("fig1a.toml");
    let o = run(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--horizon",
        "1000",
        "--reps",
        "5",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let m: serde_json::Value = serde_json::from_slice(&fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["effective"]["horizon"], 1000);
    assert_eq!(m["effective"]["replications"], 5);
    assert_eq!(m["effective"]["seeds"].as_array().unwrap().len(), 5);
    assert_eq!(m["effective"]["kappa_source"], "surrogate");
    assert_eq!(m["instance"]["arms"], 6);
    assert!((m["instance"]["mu_star"].as_f64().unwrap() - 0.9).abs() < 1e-12);
    let agg = fs::read_to_string(out.join("aggregate.csv")).unwrap();
    assert!(agg.starts_with("policy,t,mean,sd,ci95\n"));
    assert!(agg.lines().any(|l| l.starts_with("uniform_random,1000,")));
    assert!(!out.join("audit.jsonl").exists());
}

#[test]
fn simulate_is_byte_identical_across_runs_and_threads() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", TWO_GAUSSIANS);
    let mut outs = Vec::new();
    for (k, threads) in ["1", "1", "3"].iter().enumerate() {
        let out = tmp.path().join(format!("o{k}"));
        let o = run(&[
            "simulate",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--threads",
            threads,
            "--audit",
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        outs.push(out);
    }
    for f in ["traces.csv", "aggregate.csv", "manifest.json", "audit.jsonl"] {
        let a = fs::read(outs[0].join(f)).unwrap();
        for o in &outs[1..] {
            assert_eq!(a, fs::read(o.join(f)).unwrap(), "{f}");
        }
    }
}

#[test]
fn threads_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", TWO_GAUSSIANS);
    let o = bin()
        .args([
            "simulate",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            tmp.path().join("o").to_str().unwrap(),
        ])
        .env("DEPBANDITS_THREADS", "2")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let o = bin()
        .args(["simulate", "--config", cfg.to_str().unwrap()])
        .env("DEPBANDITS_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn invalid_config_reports_location_and_writes_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.toml",
        &TWO_GAUSSIANS.replace("horizon = 300", "horizon = 300\nhorizn = 3"),
    );
    let out = tmp.path().join("never");
    let o = run(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    let e = stderr(&o);
    assert!(e.contains("horizn") && e.contains("line"), "{e}");
    assert!(!out.exists());

    let cfg = write_config(
        tmp.path(),
        "d.toml",
        &TWO_GAUSSIANS.replace("theta = [0.3]", "theta = [1.5]"),
    );
    let o = run(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert!(!out.exists());
}

#[test]
fn write_failure_removes_partial_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", TWO_GAUSSIANS);
    let out = tmp.path().join("o");
    // a directory in the way of the second file
    fs::create_dir_all(out.join("aggregate.csv")).unwrap();
    let o = run(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(!out.join("traces.csv").exists());
    assert!(!out.join("manifest.json").exists());
}

#[test]
fn output_dir_resolves_against_config() {
    let tmp = tempfile::tempdir().unwrap();
    let sub = tmp.path().join("cfgs");
    fs::create_dir_all(&sub).unwrap();
    let cfg = write_config(&sub, "c.toml", &format!("output_dir = \"../res\"\n{TWO_GAUSSIANS}"));
    let o = run(&["simulate", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(tmp.path().join("res/traces.csv").exists());
}

#[test]
fn bounds_report_for_bundled_gaussian_scenario() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = configs().join("fig2a.toml");
    let o = run(&[
        "bounds",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let doc: serde_json::Value = serde_json::from_slice(&fs::read(tmp.path().join("bounds.json")).unwrap()).unwrap();
    let r = &doc["report"];
    assert_eq!(r["suboptimal_clusters"], 2);
    assert_eq!(r["lower"]["terms"].as_array().unwrap().len(), 2);
    // the optimal cluster still holds suboptimal arms
    assert_eq!(r["upper"]["terms"].as_array().unwrap().len(), 3);
    let lower = r["lower"]["coefficient"].as_f64().unwrap();
    let upper = r["upper"]["coefficient"].as_f64().unwrap();
    assert!(lower > 0.0 && lower <= upper, "{lower} {upper}");
}

#[test]
fn single_cluster_lower_bound_is_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", TWO_GAUSSIANS);
    let o = run(&[
        "bounds",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let doc: serde_json::Value = serde_json::from_slice(&fs::read(tmp.path().join("bounds.json")).unwrap()).unwrap();
    assert_eq!(doc["report"]["lower"]["coefficient"].as_f64(), Some(0.0));
}

#[test]
fn missing_kappa_names_fields() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", &TWO_GAUSSIANS.replace("kappa = 2.0\n", ""));
    let o = run(&[
        "bounds",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    let e = stderr(&o);
    assert!(e.contains("l_p") && e.contains("sigma"), "{e}");
    let o = run(&[
        "bounds",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        tmp.path().to_str().unwrap(),
        "--kappa",
        "3",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn certify_writes_constants() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", TWO_GAUSSIANS);
    let o = run(&[
        "certify",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let doc: serde_json::Value = serde_json::from_slice(&fs::read(tmp.path().join("constants.json")).unwrap()).unwrap();
    let c = &doc["clusters"][0];
    for key in ["cluster", "pairs", "B", "Sigma", "Gamma"] {
        assert!(!c[key].is_null(), "{key}");
    }
    let lb01 = c["pairs"]
        .as_array()
        .unwrap()
        .iter()
        .find(|p| p["pair"] == serde_json::json!([0, 1]))
        .unwrap();
    assert!((lb01["lb"].as_f64().unwrap() - 0.25).abs() < 1e-6);
}

#[test]
fn certify_violation_exits_three() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.toml",
        &TWO_GAUSSIANS.replace("scale = 2.0", "scale = 0.0"),
    );
    let o = run(&[
        "certify",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(tmp.path().join("constants.json").exists());
}

#[test]
fn plot_renders_and_rejects_bad_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let csv = tmp.path().join("a.csv");
    fs::write(&csv, "policy,t,mean,sd,ci95\nucb_d,1,0.4,0,0\nucb_d,10,2,0.5,0.3\n").unwrap();
    let svg = tmp.path().join("p/a.svg");
    let o = run(&["plot", csv.to_str().unwrap(), svg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(fs::read_to_string(&svg).unwrap().contains("<polyline"));

    fs::write(&csv, "policy,t,mean,sd,ci95\nucb_d,1,0.4,0,0\nucb_d,x,2,0.5,0.3\n").unwrap();
    let o = run(&["plot", csv.to_str().unwrap(), svg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("row 3"), "{}", stderr(&o));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(run(&[]).status.code(), Some(1));
    assert_eq!(run(&["simulate"]).status.code(), Some(1));
    assert_eq!(run(&["--version"]).status.code(), Some(0));
    let o = run(&["simulate", "--config", "/nonexistent/x.toml"]);
    assert_eq!(o.status.code(), Some(1));
}
