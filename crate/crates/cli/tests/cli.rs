use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_adaptstab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}\nstderr: {}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

#[test]
fn prep_steane_exhaustive() {
    let out = run(&["prep", "builtin:steane", "--verify", "exhaustive"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    let ver = &v["result"]["verification"];
    assert_eq!(ver["passed"], true);
    assert_eq!(ver["exhaustive_branches"], 64);
    assert!(ver["depth"].as_u64().unwrap() <= 44);
    assert!(ver["bounds"].as_array().unwrap().iter().all(|b| b["satisfied"] == true));
}

#[test]
fn prep_repetition_writes_ghz_circuit() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rep.json");
    let out = run(&["prep", "builtin:repetition3", "--out", path.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    let gens: Vec<String> = v["result"]["target"]["generators"]
        .as_array()
        .unwrap()
        .iter()
        .map(|g| g.as_str().unwrap().to_string())
        .collect();
    assert_eq!(gens, ["ZZI", "IZZ", "XXX"]);
    let circuit = std::fs::read_to_string(&path).unwrap();
    assert!(circuit.contains("\"m\""));
}

#[test]
fn prep_code_file_and_partition() {
    let dir = tempfile::tempdir().unwrap();
    let codefile = dir.path().join("bell.txt");
    std::fs::write(&codefile, "# Bell pair\nXX\nZZ\n").unwrap();
    let part = dir.path().join("part.json");
    std::fs::write(
        &part,
        r#"{"s1": ["ZZ"], "s2": ["XX"], "phi": {"m": 2, "cbits": 0, "layers": [[{"op": "H", "qubits": [0]}, {"op": "H", "qubits": [1]}]]}}"#,
    )
    .unwrap();
    let out = run(&[
        "prep",
        codefile.to_str().unwrap(),
        "--partition",
        part.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(json(&out)["result"]["verification"]["passed"], true);
}

#[test]
fn bad_code_file_is_a_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let codefile = dir.path().join("bad.txt");
    std::fs::write(&codefile, "XX\nQZ\n").unwrap();
    let out = run(&["prep", codefile.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
    assert_eq!(code(&run(&["prep", "builtin:golay"])), 1);
    assert_eq!(code(&run(&["frobnicate"])), 1);
}

#[test]
fn weight_command() {
    let out = run(&["weight", "builtin:ghz6", "--oracle"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["result"]["stabilizer_weight"], 6);
    assert_eq!(v["result"]["oracle"]["agrees"], true);
    assert_eq!(json(&run(&["weight", "builtin:zero4"]))["result"]["stabilizer_weight"], 1);
    assert_eq!(json(&run(&["weight", "builtin:steane"]))["result"]["stabilizer_weight"], 4);
    assert_eq!(code(&run(&["weight", "builtin:ghz30"])), 3);
}

#[test]
fn weight_from_tableau_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.json");
    std::fs::write(&path, r#"{"n": 2, "generators": ["XX", "ZZ"]}"#).unwrap();
    let v = json(&run(&["weight", path.to_str().unwrap()]));
    assert_eq!(v["result"]["weight_vector"], serde_json::json!([2, 2]));
    assert_eq!(v["inputs"][path.to_str().unwrap()].as_str().unwrap().len(), 64);
}

#[test]
fn correlation_commands() {
    let v = json(&run(&["cor", "ghz:8"]));
    assert!((v["result"]["report"]["value"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    let v = json(&run(&["cor", "hypergraph:4", "--pair", "X,X"]));
    assert!((v["result"]["value"].as_f64().unwrap() - 0.1875).abs() < 1e-12);
    let v = json(&run(&["crange", "w:8"]));
    assert_eq!(v["result"]["correlation_range"], 8);
    assert_eq!(code(&run(&["cor", "ghz:20"])), 3);
    assert_eq!(code(&run(&["cor", "qqq:3"])), 1);
}

#[test]
fn seeded_runs_are_reproducible() {
    let args = ["--seed", "7", "cor", "w:5", "--w", "2", "--method", "alt"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    let c = run(&["--seed", "3", "antishallow", "hypergraph:4"]);
    let d = run(&["--seed", "3", "antishallow", "hypergraph:4"]);
    assert_eq!(c.stdout, d.stdout);
}

#[test]
fn ghz_demo_and_bounds() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ghz.json");
    let out = run(&["ghz-demo", "--n", "16", "--a", "4", "--k", "2", "--out", path.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["result"]["ancillas"], 3);
    assert_eq!(v["result"]["verification"]["passed"], true);

    let c = path.to_str().unwrap();
    let out = run(&["bounds", "--circuit", c, "--target", "builtin:ghz16"]);
    assert_eq!(code(&out), 0);
    let checks = json(&out)["result"]["checks"].as_array().unwrap().clone();
    assert!(checks.len() >= 2 && checks.iter().all(|c| c["satisfied"] == true));

    let out = run(&["bounds", "--circuit", c, "--target", "builtin:ghz16", "--geometry", "grid:1"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["result"]["profile"]["geometry"], "grid(19)");
    // (3 + 1) * (2 * 1 * 9 + 1)
    assert_eq!(v["result"]["checks"][0]["lhs"], 76);

    let missing = dir.path().join("missing.json");
    assert_eq!(code(&run(&["bounds", "--circuit", c, "--target", missing.to_str().unwrap()])), 1);

    let out = run(&["lightcone", "--circuit", c, "--from", "0"]);
    let v = json(&out);
    assert_eq!(v["result"]["within_bound"], true);
    let back = json(&run(&["lightcone", "--circuit", c, "--from", "5", "--backward", "--classical"]));
    assert!(back["result"]["size"].as_u64().unwrap() >= 2);
}

#[test]
fn antishallow_ghz_interval() {
    let v = json(&run(&["antishallow", "ghz:8"]));
    let lower = v["result"]["lower"].as_f64().unwrap();
    let upper = v["result"]["upper"]["value"].as_f64().unwrap();
    assert!((lower - (36.0f64 / 35.0).log2()).abs() < 1e-9);
    assert!((upper - 1.0).abs() < 1e-9);
}
