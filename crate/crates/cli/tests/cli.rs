use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn config(name: &str) -> String {
    configs().join(name).to_str().unwrap().to_string()
}

fn hetmec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hetmec"))
        .args(args)
        .env_remove("HETMEC_VERTEX_CAP")
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

struct Scratch(TempDir);

impl Scratch {
    fn new() -> Self {
        Scratch(tempfile::tempdir().unwrap())
    }

    fn path(&self, name: &str) -> String {
        self.0.path().join(name).to_str().unwrap().to_string()
    }

    fn write(&self, name: &str, text: &str) -> String {
        let p = self.path(name);
        std::fs::write(&p, text).unwrap();
        p
    }

    fn json(&self, name: &str) -> Value {
        serde_json::from_str(&std::fs::read_to_string(self.path(name)).unwrap()).unwrap()
    }
}

fn scenario_configs() -> Vec<String> {
    let mut v: Vec<String> = std::fs::read_dir(configs())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .map(|p| p.to_str().unwrap().to_string())
        .collect();
    v.sort();
    v
}

#[test]
fn validate_reports_single_branch_counts() {
    let o = hetmec(&["validate", "--config", &config("table3_chain.json")]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    // One branch with N = 3: N + 2 compute rows, N + 1 transmission rows.
    assert_eq!(String::from_utf8(o.stdout).unwrap(), "N=3 M=[1,1,1] devices=1 K_c=5 K_t=4 K=9\n");
}

#[test]
fn validate_rejects_bad_files() {
    let dir = Scratch::new();
    let text = std::fs::read_to_string(config("chain_fixture.json")).unwrap();
    let rho = dir.write("rho.json", &text.replace("\"rho\": 0.1", "\"rho\": 1.5"));
    let o = hetmec(&["validate", "--config", &rho]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("rho out of range"));

    let empty = dir.write("empty.json", "");
    let o = hetmec(&["validate", "--config", &empty]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("parse error"));

    let o = hetmec(&["validate", "--config", &dir.path("missing.json")]);
    assert_eq!(code(&o), 2);

    let orphan = dir.write("orphan.json", &text.replace("\"parent\": 0", "\"parent\": 2"));
    let o = hetmec(&["validate", "--config", &orphan]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("layers[1].nodes[0].parent"));
}

#[test]
fn validate_accepts_what_solve_accepts() {
    let dir = Scratch::new();
    for cfg in scenario_configs() {
        let solve = hetmec(&["solve", "--config", &cfg, "--out", &dir.path("s.json")]);
        let validate = hetmec(&["validate", "--config", &cfg]);
        assert!(matches!(code(&solve), 0 | 3), "{cfg}: {}", stderr(&solve));
        assert_eq!(code(&validate), 0, "{cfg}");
    }
}

#[test]
fn solve_fixtures() {
    let dir = Scratch::new();
    let out = dir.path("a.json");
    let o = hetmec(&["solve", "--config", &config("chain_fixture.json"), "--out", &out]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v = dir.json("a.json");
    assert_eq!(v["status"], "optimal");
    assert!((v["latency"]["total"].as_f64().unwrap() - 1.5).abs() <= 1e-6);
    assert_eq!(v["s_star"], serde_json::json!([0.0, 0.0]));
    assert_eq!(v["links"].as_array().unwrap().len(), 2);

    let o = hetmec(&["solve", "--config", &config("chain_fixture_cc05.json"), "--out", &out, "--tol", "1e-10"]);
    assert_eq!(code(&o), 0);
    assert!((dir.json("a.json")["latency"]["total"].as_f64().unwrap() - 3.23).abs() <= 1e-6);
}

#[test]
fn solve_congested_writes_marker() {
    let dir = Scratch::new();
    let out = dir.path("c.json");
    let o = hetmec(&["solve", "--config", &config("chain_overload.json"), "--out", &out]);
    assert_eq!(code(&o), 3);
    assert_eq!(std::fs::read_to_string(&out).unwrap(), r#"{"status":"congested"}"#);
}

#[test]
fn solve_flag_errors() {
    let dir = Scratch::new();
    let out = dir.path("x.json");
    let cfg = config("chain_fixture.json");
    assert_eq!(code(&hetmec(&["solve", "--config", &cfg, "--out", &out, "--tol", "-1"])), 2);
    assert_eq!(code(&hetmec(&["solve", "--config", &cfg])), 2);
    assert_eq!(code(&hetmec(&["solve", "--config", &cfg, "--out", &out, "--jobs", "0"])), 2);
    let o = Command::new(env!("CARGO_BIN_EXE_hetmec"))
        .args(["solve", "--config", &cfg, "--out", &out])
        .env("HETMEC_VERTEX_CAP", "lots")
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
    let unwritable = dir.path("no/such/dir/x.json");
    assert_eq!(code(&hetmec(&["solve", "--config", &cfg, "--out", &unwritable])), 1);
}

fn csv_rows(path: &str) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn sweep_single_step_and_flag_errors() {
    let dir = Scratch::new();
    let out = dir.path("s.csv");
    let cfg = config("chain_fixture.json");
    let o = hetmec(&["sweep", "--config", &cfg, "--scale-min", "0.5", "--scale-max", "0.5", "--steps", "1", "--out", &out]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rows = csv_rows(&out);
    assert_eq!(rows[0].join(","), "scheme,lambda_scale,system_latency,processing_rate_per_ed,status");
    let schemes: Vec<&str> = rows[1..].iter().map(|r| r[0].as_str()).collect();
    assert_eq!(schemes, ["lma", "cloud", "local", "conventional-mec"]);
    assert!(rows[1..].iter().all(|r| r[1] == "0.5"));

    let base = ["sweep", "--config", &cfg, "--out", &out];
    let with = |extra: &[&str]| code(&hetmec(&[&base[..], extra].concat()));
    assert_eq!(with(&["--scale-min", "2", "--scale-max", "1", "--steps", "3"]), 2);
    assert_eq!(with(&["--scale-min", "0", "--scale-max", "1", "--steps", "0"]), 2);
    assert_eq!(with(&["--scale-min", "0", "--scale-max", "1", "--steps", "3", "--schemes", "lma,fog"]), 2);
    assert_eq!(with(&["--scale-min", "0", "--scale-max", "1"]), 2);
}

#[test]
fn sweep_on_chain_lma_dominates_and_rates_grow() {
    let dir = Scratch::new();
    let out = dir.path("s.csv");
    let o = hetmec(&[
        "sweep", "--config", &config("chain_fixture.json"), "--schemes", "mec,lma,cloud,local",
        "--scale-min", "0.1", "--scale-max", "1.0", "--steps", "10", "--out", &out,
    ]);
    assert_eq!(code(&o), 0);
    let rows = csv_rows(&out);
    let by = |s: &str| rows[1..].iter().filter(|r| r[0] == s).cloned().collect::<Vec<_>>();
    let lma = by("lma");
    assert_eq!(lma.len(), 10);
    for base in ["cloud", "local", "conventional-mec"] {
        for (l, b) in lma.iter().zip(by(base)) {
            if b[4] == "ok" {
                assert_eq!(l[4], "ok");
                let (lv, bv): (f64, f64) = (l[2].parse().unwrap(), b[2].parse().unwrap());
                assert!(lv <= bv * (1.0 + 1e-8), "{base} at {}: {lv} > {bv}", l[1]);
            }
        }
    }
    for s in ["lma", "cloud", "local", "conventional-mec"] {
        let rates: Vec<f64> = by(s).iter().map(|r| r[3].parse().unwrap()).collect();
        assert!(rates.windows(2).all(|w| w[1] >= w[0]), "{s}: {rates:?}");
    }
}

#[test]
fn robustness_and_insertions() {
    let dir = Scratch::new();
    let out = dir.path("r.json");
    let cfg = config("uplink_limited_chain.json");
    let o = hetmec(&["robustness", "--config", &cfg, "--out", &out]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v = dir.json("r.json");
    assert!((v["t_star"].as_f64().unwrap() - 0.59).abs() <= 1e-6);
    assert_eq!(v["bottleneck"]["kind"], "transmission-shortage");
    assert_eq!(v["bottleneck"]["layer"], 1);

    let layer = configs().join("insertions/compute_node.json");
    let layer = layer.to_str().unwrap();
    let o = hetmec(&["robustness", "--config", &cfg, "--insert", layer, "--position", "2", "--out", &out]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let ins = &dir.json("r.json")["insertion"];
    assert!((ins["t_after"].as_f64().unwrap() - 0.86).abs() <= 1e-6);
    assert_eq!(ins["predicted"], "enhances");
    assert_eq!(ins["consistent"], true);

    let inline = r#"{"nodes": [{"compute_mbps": 0.3, "trans_mbps": 100, "children": [0]}]}"#;
    let o = hetmec(&["robustness", "--config", &cfg, "--insert", inline, "--position", "1", "--out", &out]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let ins = &dir.json("r.json")["insertion"];
    let (before, after) = (ins["t_before"].as_f64().unwrap(), ins["t_after"].as_f64().unwrap());
    assert!((after - before).abs() <= 1e-6);
    assert_eq!(ins["predicted"], "no-effect");
}

#[test]
fn robustness_wiring_errors() {
    let dir = Scratch::new();
    let out = dir.path("r.json");
    let cfg = config("uplink_limited_chain.json");
    let bad = r#"{"nodes": [{"compute_mbps": 0.3, "trans_mbps": 100, "children": [5]}]}"#;
    assert_eq!(code(&hetmec(&["robustness", "--config", &cfg, "--insert", bad, "--position", "2", "--out", &out])), 2);
    let orphaning = r#"{"nodes": [{"compute_mbps": 0.3, "trans_mbps": 100, "children": []}]}"#;
    assert_eq!(code(&hetmec(&["robustness", "--config", &cfg, "--insert", orphaning, "--position", "2", "--out", &out])), 2);
    let ok = r#"{"nodes": [{"compute_mbps": 0.3, "trans_mbps": 100, "children": [0]}]}"#;
    assert_eq!(code(&hetmec(&["robustness", "--config", &cfg, "--insert", ok, "--position", "3", "--out", &out])), 2);
    assert_eq!(code(&hetmec(&["robustness", "--config", &cfg, "--insert", ok, "--out", &out])), 2);
}

#[test]
fn oracle_contract() {
    let dir = Scratch::new();
    let out = dir.path("o.json");
    let cfg = config("chain_fixture.json");
    let o = hetmec(&["oracle", "--config", &cfg, "--grid-step", "0.01", "--out", &out]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v = dir.json("o.json");
    assert_eq!(v["s_star"], serde_json::json!([0.0, 0.0]));
    assert!((v["latency"]["total"].as_f64().unwrap() - 1.5).abs() <= 1e-9);
    assert_eq!(v["grid_step"], 0.01);

    assert_eq!(code(&hetmec(&["oracle", "--config", &cfg, "--grid-step", "1.5", "--out", &out])), 2);
    assert_eq!(code(&hetmec(&["oracle", "--config", &cfg, "--grid-step", "0", "--out", &out])), 2);
    assert_eq!(code(&hetmec(&["oracle", "--config", &config("chain_overload.json"), "--grid-step", "0.1", "--out", &out])), 3);

    // One server with five devices: D = 6, 101^6 grid points.
    let wide = dir.write(
        "wide.json",
        r#"{"layers": [
            {"name": "cloud", "nodes": [{"compute_mbps": 2, "trans_mbps": 2}]},
            {"name": "ap", "nodes": [{"compute_mbps": 1, "trans_mbps": 3}]},
            {"name": "ed", "nodes": [{"compute_mbps": 0.2}, {"compute_mbps": 0.2}, {"compute_mbps": 0.2}, {"compute_mbps": 0.2}, {"compute_mbps": 0.2}]}
        ], "eds": {"lambda_mbps": 0.3}, "rho": 0.1}"#,
    );
    let o = hetmec(&["oracle", "--config", &wide, "--grid-step", "0.01", "--out", &out]);
    assert_eq!(code(&o), 4, "{}", stderr(&o));
    assert_eq!(code(&hetmec(&["oracle", "--config", &cfg, "--grid-step", "0.01", "--budget", "100", "--out", &out])), 4);
}
