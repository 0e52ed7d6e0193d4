use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use beldim::function_class::FunctionClass;
use beldim::io::{instance_from_str, instance_to_string};
use beldim::mdp::optimal_q;
use beldim::zoo::builtin;
use serde_json::Value;

fn run(args: &[&str]) -> (i32, String) {
    let mut log = Vec::new();
    let argv = std::iter::once("beldim").chain(args.iter().copied());
    let code = beldim_cli::main_with_args(argv, &mut log);
    (code, String::from_utf8(log).unwrap())
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn assert_schema(schema: &str, doc: &Value) {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/schemas").join(schema);
    let schema: Value = read_json(&path);
    let compiled = jsonschema::JSONSchema::compile(&schema).unwrap();
    let msgs: Vec<String> = match compiled.validate(doc) {
        Ok(()) => Vec::new(),
        Err(errors) => errors.map(|e| format!("{} at {}", e, e.instance_path)).collect(),
    };
    assert!(msgs.is_empty(), "schema violations: {msgs:?}");
}

fn dir_bytes(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out: Vec<(PathBuf, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let path = e.unwrap().path();
            (path.file_name().unwrap().into(), fs::read(&path).unwrap())
        })
        .collect();
    out.sort();
    out
}

#[test]
fn gen_prop34_round_trips_and_lists_facts() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("p.json");
    let (code, log) = run(&["gen", "prop34", "--m", "6", "--out", p(&out)]);
    assert_eq!(code, 0);
    assert!(log.contains("eluder >= 5"), "{log}");
    let text = fs::read_to_string(&out).unwrap();
    assert_schema("instance.schema.json", &serde_json::from_str(&text).unwrap());
    let inst = instance_from_str(&text).unwrap();
    assert_eq!(instance_to_string(&inst), text);
    let direct = builtin("prop34:6").unwrap();
    assert_eq!(instance_to_string(&direct), text);
    assert_eq!(inst.facts.len(), 4);
}

#[test]
fn gen_random_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a.json"), tmp.path().join("b.json"));
    for out in [&a, &b] {
        let args = ["gen", "random", "--S", "4", "--A", "2", "--H", "3", "--seeds", "2", "--seed", "42", "--out", p(out)];
        assert_eq!(run(&args).0, 0);
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_schema("instance.schema.json", &read_json(&a));
}

#[test]
fn usage_errors_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("x");
    assert_eq!(run(&["gen", "prop34"]).0, 2);
    assert_eq!(run(&["gen", "random", "--S", "2"]).0, 2);
    assert_eq!(run(&["dims", "--builtin", "prop34:3", "--measure", "be"]).0, 2);
    assert_eq!(run(&["dims", "--builtin", "nope:3", "--measure", "rank"]).0, 2);
    assert_eq!(run(&["run", "--builtin", "prop34:3", "--out", p(&out)]).0, 2);
    assert_eq!(run(&["sweep", "--over", "K", "--grid", "", "--builtin", "prop34:3", "--out", p(&out)]).0, 2);
    assert_eq!(run(&["sweep", "--over", "K", "--grid", "10", "--builtin", "prop34:3", "--seeds", "4..4", "--out", p(&out)]).0, 2);
    assert_eq!(run(&["frobnicate"]).0, 2);
    assert!(!out.exists());
}

#[test]
fn runtime_errors_exit_with_three() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("missing.json");
    assert_eq!(run(&["dims", "--instance", p(&missing), "--measure", "rank"]).0, 3);
    let bad = tmp.path().join("bad.json");
    fs::write(&bad, "{\"format\": \"other\"}").unwrap();
    assert_eq!(run(&["dims", "--instance", p(&bad), "--measure", "rank"]).0, 3);
}

#[test]
fn binary_exit_codes_and_thread_cap() {
    let exe = env!("CARGO_BIN_EXE_beldim");
    let status = Command::new(exe).args(["gen", "prop34"]).output().unwrap();
    assert_eq!(status.status.code(), Some(2));
    let out = Command::new(exe)
        .args(["dims", "--builtin", "prop34:3", "--measure", "rank"])
        .env("BELDIM_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["value"], 3);
    let bad = Command::new(exe)
        .args(["dims", "--builtin", "prop34:3", "--measure", "rank"])
        .env("BELDIM_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

fn dims(args: &[&str]) -> Value {
    let (code, log) = run(&[&["dims"], args].concat());
    assert_eq!(code, 0, "{log}");
    let report: Value = serde_json::from_str(&log).unwrap();
    assert_schema("dims-report.schema.json", &report);
    report
}

#[test]
fn dims_reports_match_known_values() {
    let r = dims(&["--builtin", "prop34:6", "--measure", "be", "--family", "DF", "--eps", "0.5"]);
    assert!(r["value"].as_u64().unwrap() <= 5);
    assert_eq!(r["exact"], true);
    assert_eq!(r["verified"], true);
    assert_eq!(r["witness"].as_array().unwrap().len() as u64, r["value"].as_u64().unwrap());

    let r = dims(&["--builtin", "appF_b:8", "--measure", "be", "--family", "DF", "--eps", "0.4"]);
    assert!(r["value"].as_u64().unwrap() >= 8);
    assert_eq!(r["exact"], true);

    let r = dims(&["--builtin", "prop34:6", "--measure", "eluder", "--eps", "0.5"]);
    assert!(r["value"].as_u64().unwrap() >= 5);
    let r = dims(&["--builtin", "prop34:6", "--measure", "rank"]);
    assert_eq!(r["value"], 6);
    let r = dims(&["--builtin", "appF_a:4", "--measure", "vbe", "--family", "Ddelta", "--eps", "0.4"]);
    assert_eq!(r["exact"], true);
    dims(&["--builtin", "appF_a:4", "--measure", "vrank"]);
}

#[test]
fn dims_on_singleton_optimal_class_is_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let mut inst = builtin("random:3:2:2:1:5").unwrap();
    inst.class = FunctionClass::from_members(vec![optimal_q(&inst.mdp)]).unwrap();
    inst.facts.clear();
    let path = tmp.path().join("single.json");
    fs::write(&path, instance_to_string(&inst)).unwrap();
    for measure in ["be", "vbe"] {
        for family in ["DF", "Ddelta"] {
            let r = dims(&["--instance", p(&path), "--measure", measure, "--family", family, "--eps", "0.1"]);
            assert_eq!(r["value"], 0);
        }
    }
    assert_eq!(dims(&["--instance", p(&path), "--measure", "rank"])["value"], 0);
}

#[test]
fn dims_on_raw_tables_and_vectors() {
    let tmp = tempfile::tempdir().unwrap();
    let tables = tmp.path().join("t.json");
    fs::write(&tables, r#"{"functions": [[1, 0], [0, 1]], "distributions": [[1, 0], [0, 1], [0.5, 0.5]]}"#).unwrap();
    let r = dims(&["--measure", "de", "--tables", p(&tables), "--eps", "0.3"]);
    assert_eq!(r["value"], 2);
    assert_eq!(r["verified"], true);
    let vectors = tmp.path().join("v.json");
    fs::write(&vectors, r#"{"vectors": [[1, 0, 0]]}"#).unwrap();
    let r = dims(&["--measure", "effdim", "--vectors", p(&vectors), "--eps", "1"]);
    assert_eq!(r["value"], 5);
    assert_eq!(run(&["dims", "--measure", "de", "--eps", "0.3"]).0, 2);
}

#[test]
fn golf_on_optimal_singleton_has_zero_regret() {
    let tmp = tempfile::tempdir().unwrap();
    let mut inst = builtin("random:3:2:3:1:2").unwrap();
    inst.class = FunctionClass::from_members(vec![optimal_q(&inst.mdp)]).unwrap();
    inst.facts.clear();
    let path = tmp.path().join("q.json");
    fs::write(&path, instance_to_string(&inst)).unwrap();
    let out = tmp.path().join("out");
    let (code, log) = run(&["run", "--instance", p(&path), "--agent", "golf", "--episodes", "10", "--seeds", "0,1", "--out", p(&out)]);
    assert_eq!(code, 0, "{log}");
    for seed in [0, 1] {
        let csv = fs::read_to_string(out.join(format!("golf_seed{seed}.csv"))).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("k,f_index,opt_value,policy_value,regret,cum_regret,b_size"));
        let rows: Vec<&str> = lines.collect();
        assert_eq!(rows.len(), 10);
        for row in rows {
            let cols: Vec<&str> = row.split(',').collect();
            assert_eq!(cols[4].parse::<f64>().unwrap(), 0.0);
        }
        assert!(!csv.contains('\r'));
    }
    let summary = read_json(&out.join("summary.json"));
    assert_schema("run-summary.schema.json", &summary);
    assert_eq!(summary["aggregate"]["spread"]["median"], 0.0);
}

#[test]
fn olive_exact_respects_phase_bound_and_reruns_identically() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for out in [&a, &b] {
        let args = ["run", "--builtin", "appF_a:4", "--include-qstar", "--agent", "olive", "--mode", "exact", "--seeds", "0..2", "--out", p(out)];
        assert_eq!(run(&args).0, 0);
    }
    assert_eq!(dir_bytes(&a), dir_bytes(&b));
    let summary = read_json(&a.join("summary.json"));
    assert_schema("run-summary.schema.json", &summary);
    let seed = &summary["seeds"][0];
    assert_eq!(seed["within_phase_bound"], true);
    assert!(seed["phases"].as_u64().unwrap() <= seed["phase_bound"].as_u64().unwrap());
    assert_eq!(seed["audit"]["valid"], true);
    assert_eq!(summary["prepared"]["olive"]["d_source"], "computed");
}

#[test]
fn empty_version_space_is_a_per_seed_status() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    let args = [
        "run", "--builtin", "prop34:4", "--agent", "olive", "--mode", "exact", "--zeta-act", "0.01", "--zeta-elim", "0.001",
        "--out", p(&out),
    ];
    let (code, _) = run(&args);
    assert_eq!(code, 0);
    let summary = read_json(&out.join("summary.json"));
    assert_schema("run-summary.schema.json", &summary);
    assert!(summary["seeds"][0]["status"].as_str().unwrap().starts_with("aborted"));
    assert_eq!(summary["aggregate"]["aborted"], 1);
    assert!(!out.join("olive_seed0.csv").exists());
}

#[test]
fn config_file_precedence() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("cfg.json");
    fs::write(&cfg, r#"{"builtin": "prop34:3", "agent": "golf", "episodes": 7, "seeds": [3], "beta": 1.5}"#).unwrap();
    let out = tmp.path().join("o1");
    assert_eq!(run(&["run", "--config", p(&cfg), "--out", p(&out)]).0, 0);
    let s = read_json(&out.join("summary.json"));
    assert_eq!(s["config"]["episodes"], 7);
    assert_eq!(s["config"]["seeds"], serde_json::json!([3]));
    assert_eq!(s["config"]["beta"], 1.5);
    assert_eq!(fs::read_to_string(out.join("golf_seed3.csv")).unwrap().lines().count(), 8);

    let out = tmp.path().join("o2");
    assert_eq!(run(&["run", "--config", p(&cfg), "--episodes", "4", "--seeds", "1", "--out", p(&out)]).0, 0);
    let s = read_json(&out.join("summary.json"));
    assert_eq!(s["config"]["episodes"], 4);
    assert_eq!(s["config"]["beta"], 1.5);
    assert_eq!(s["seeds"][0]["seed"], 1);

    let out = tmp.path().join("o3");
    assert_eq!(run(&["run", "--builtin", "prop34:3", "--agent", "golf", "--out", p(&out)]).0, 0);
    let s = read_json(&out.join("summary.json"));
    assert_eq!(s["config"]["episodes"], 1000);
    assert_eq!(s["config"]["seeds"], serde_json::json!([0]));
    assert!(s["config"]["beta"].is_null());

    let bad = tmp.path().join("bad.json");
    fs::write(&bad, r#"{"episodez": 3}"#).unwrap();
    assert_eq!(run(&["run", "--config", p(&bad), "--out", p(&out)]).0, 2);
}

#[test]
fn sweeps_over_k_and_m() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("k");
    let args = ["sweep", "--over", "K", "--grid", "20,40,80,160,320", "--builtin", "random:3:2:2:1:0", "--seeds", "0..3", "--out", p(&out)];
    assert_eq!(run(&args).0, 0);
    let csv = fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 6);
    assert!(csv.starts_with("K,seeds,ok,median,q1,q3\n"));
    assert_schema("sweep-summary.schema.json", &read_json(&out.join("sweep.json")));

    let out = tmp.path().join("m");
    assert_eq!(run(&["sweep", "--over", "m", "--grid", "4,6,8", "--generator", "prop34", "--out", p(&out)]).0, 0);
    let csv = fs::read_to_string(out.join("sweep.csv")).unwrap();
    for m in ["4", "6", "8"] {
        assert!(csv.lines().filter(|l| l.starts_with(&format!("{m},"))).count() >= 3);
    }
    assert!(csv.lines().skip(1).all(|l| l.ends_with(",true")), "{csv}");
    assert_schema("sweep-summary.schema.json", &read_json(&out.join("sweep.json")));

    let out = tmp.path().join("o");
    let args = ["sweep", "--over", "m", "--grid", "3,4", "--generator", "appF_b", "--agent", "olive", "--mode", "exact", "--include-qstar", "--out", p(&out)];
    assert_eq!(run(&args).0, 0);
    let csv = fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert!(csv.lines().skip(1).all(|l| l.ends_with(",true,true")), "{csv}");
    assert_schema("sweep-summary.schema.json", &read_json(&out.join("sweep.json")));
    assert_eq!(run(&["sweep", "--over", "m", "--grid", "3", "--out", p(&out)]).0, 2);
}

#[test]
fn every_command_reruns_byte_identically() {
    let tmp = tempfile::tempdir().unwrap();
    let commands: Vec<Vec<&str>> = vec![
        vec!["run", "--builtin", "random:3:2:2:2:1", "--agent", "golf", "--episodes", "50", "--seeds", "0..4"],
        vec!["run", "--builtin", "random:3:2:2:2:1", "--agent", "vgolf", "--episodes", "50", "--seeds", "0..4"],
        vec!["run", "--builtin", "appF_b:3", "--include-qstar", "--agent", "volive", "--n-act", "50", "--n-elim", "50", "--seeds", "0..3"],
        vec!["sweep", "--over", "K", "--grid", "10,20", "--builtin", "random:3:2:2:2:1", "--seeds", "0..3"],
    ];
    for (i, cmd) in commands.iter().enumerate() {
        let dirs: Vec<PathBuf> = (0..2).map(|r| tmp.path().join(format!("{i}-{r}"))).collect();
        for d in &dirs {
            let args: Vec<&str> = cmd.iter().copied().chain(["--out", p(d)]).collect();
            assert_eq!(run(&args).0, 0, "{cmd:?}");
        }
        assert_eq!(dir_bytes(&dirs[0]), dir_bytes(&dirs[1]), "{cmd:?}");
    }
}
