use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn blindid(args: &[&str]) -> Output {
    blindid_env(args, None)
}

fn blindid_env(args: &[&str], seed: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_blindid"));
    cmd.args(args).env_remove("BLINDID_SEED");
    if let Some(s) = seed {
        cmd.env("BLINDID_SEED", s);
    }
    cmd.output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_str(&stdout(o)).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn bounds_report_has_sorted_keys() {
    let o = blindid(&["bounds", "--kind", "subspace", "--m1", "3", "--m2", "4", "--n", "10"]);
    let v = json(&o);
    assert_eq!(v["d"], 7);
    assert_eq!(v["minkowski_dim_upper"], 14);
    let text = stdout(&o);
    let keys: Vec<&str> = text
        .lines()
        .filter_map(|l| l.trim().strip_prefix('"'))
        .filter_map(|l| l.split('"').next())
        .collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
    assert!(text.ends_with("}\n"));
}

#[test]
fn bounds_json_round_trips_at_full_precision() {
    let o = blindid(&["bounds", "--m1", "2", "--m2", "2", "--n", "9", "--delta", "0.03"]);
    let v = json(&o);
    for (k, x) in v.as_object().unwrap() {
        if let Some(f) = x.as_f64() {
            let again: f64 = format!("{f:.17e}").parse().unwrap();
            assert_eq!(again.to_bits(), f.to_bits(), "{k}");
            let reparsed: Value = serde_json::from_str(&serde_json::to_string(x).unwrap()).unwrap();
            assert_eq!(reparsed.as_f64().unwrap().to_bits(), f.to_bits(), "{k}");
        }
    }
}

#[test]
fn missing_n_exits_two() {
    let o = blindid(&["bounds", "--m1", "3", "--m2", "4"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn invalid_scenario_exits_two_naming_the_invariant() {
    let o = blindid(&["bounds", "--kind", "sparsity", "--m1", "3", "--m2", "4", "--n", "10", "--s1", "5", "--s2", "1"]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("s1"), "{err}");
}

#[test]
fn unwritable_output_exits_three() {
    let o = blindid(&["bounds", "--m1", "2", "--m2", "2", "--n", "5", "--out", "/nonexistent/dir/report.json"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn missing_config_exits_three() {
    let o = blindid(&["bounds", "--config", "/nonexistent/blindid.cfg"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn config_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.cfg", "# run\nseed = 1\nm1 = 2\nm2 = 2\nn = 5\n");
    let file_only = json(&blindid(&["gen", "--config", &cfg]));
    assert_eq!(file_only["seed"], 1);
    let flag = json(&blindid(&["gen", "--config", &cfg, "--seed", "2"]));
    assert_eq!(flag["seed"], 2);
    let env = json(&blindid_env(&["gen", "--config", &cfg], Some("7")));
    assert_eq!(env["seed"], 7);
    let both = json(&blindid_env(&["gen", "--config", &cfg, "--seed", "2"], Some("7")));
    assert_eq!(both["seed"], 2);
    let default = json(&blindid(&["gen", "--m1", "2", "--m2", "2", "--n", "5"]));
    assert_eq!(default["seed"], 42);
    // flags override any file value, not only the seed
    let n = json(&blindid(&["gen", "--config", &cfg, "--n", "6"]));
    assert_eq!(n["scenario"]["n"], 6);
}

#[test]
fn unknown_config_key_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.cfg", "m1 = 2\nm2 = 2\nn = 5\nwobble = 3\n");
    let o = blindid(&["gen", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("wobble"));
}

#[test]
fn transition_csv_header_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dir.path().join("manifest.json");
    let o = blindid(&[
        "transition",
        "--m1",
        "2",
        "--m2",
        "2",
        "--n-values",
        "2,5",
        "--trials",
        "10",
        "--restarts",
        "3",
        "--manifest",
        manifest.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "n,trials,successes,rate,d,two_d,mean_lifted_error");
    assert_eq!(lines.count(), 2);
    let m: Value = serde_json::from_str(&std::fs::read_to_string(&manifest).unwrap()).unwrap();
    assert_eq!(m["command"], "transition");
    assert_eq!(m["config"]["trials"], 10);
    assert_eq!(m["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn list_flags_override_config_lists() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "t.cfg", "m1 = 2\nm2 = 2\nn_values = 2,3,4\ntrials = 2\nrestarts = 1\n");
    let o = blindid(&["transition", "--config", &cfg, "--n-values", "5"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout(&o).lines().count(), 2);
}

#[test]
fn empty_sweep_gives_header_only() {
    let o = blindid(&["stability", "--m1", "2", "--m2", "2", "--n", "10", "--deltas", "", "--trials", "1"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(
        stdout(&o),
        "delta,trials,violations,violation_rate,epsilon,failure_bound,failure_bound_raw,mean_distance,max_distance\n"
    );
    let o = blindid(&["transition", "--m1", "2", "--m2", "2", "--n-values", ""]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "n,trials,successes,rate,d,two_d,mean_lifted_error\n");
}

#[test]
fn stability_precondition_exits_two() {
    let o = blindid(&["stability", "--m1", "2", "--m2", "2", "--n", "4", "--trials", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("n > d"));
}

#[test]
fn same_config_same_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let args = |out: &str| {
        vec![
            "stability".to_string(),
            "--m1".into(),
            "2".into(),
            "--m2".into(),
            "2".into(),
            "--n".into(),
            "8".into(),
            "--deltas".into(),
            "0,0.1".into(),
            "--trials".into(),
            "6".into(),
            "--out".into(),
            out.to_string(),
        ]
    };
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let mut args_a = args(a.to_str().unwrap());
    args_a.extend(["--threads".into(), "1".into()]);
    let mut args_b = args(b.to_str().unwrap());
    args_b.extend(["--threads".into(), "4".into()]);
    let ra: Vec<&str> = args_a.iter().map(String::as_str).collect();
    let rb: Vec<&str> = args_b.iter().map(String::as_str).collect();
    assert!(blindid(&ra).status.success());
    assert!(blindid(&rb).status.success());
    assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
}

#[test]
fn certify_modes() {
    let v = json(&blindid(&["certify", "--mode", "strong", "--m1", "2", "--m2", "2", "--n", "1", "--budget", "20"]));
    assert_eq!(v["status"], "CounterexampleFound");
    assert_eq!(v["verified"], true);
    let v = json(&blindid(&["certify", "--m1", "2", "--m2", "2", "--n", "4", "--budget", "5"]));
    assert_eq!(v["status"], "CertifiedUnique");
    assert!(v["witness"].is_null());
}

#[test]
fn recover_and_csv_formats() {
    let v = json(&blindid(&["recover", "--m1", "2", "--m2", "2", "--n", "6"]));
    assert_eq!(v["success"], true);
    let o = blindid(&["recover", "--m1", "2", "--m2", "2", "--n", "6", "--format", "csv"]);
    let text = stdout(&o);
    assert_eq!(text.lines().next().unwrap(), "lifted_error,residual,restarts_used,success,supports_visited");
    let o = blindid(&["gen", "--m1", "2", "--m2", "2", "--n", "3", "--format", "csv"]);
    let text = stdout(&o);
    assert_eq!(text.lines().next().unwrap(), "matrix,row,col,re,im");
    assert_eq!(text.lines().count(), 1 + 2 * 6);
}

#[test]
fn smallball_sharp_rows() {
    let o = blindid(&["smallball", "--rhos", "0.1", "--trials", "2000"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with("case,m1,m2,rho,spectral_norm,trials,p_hat,std_err,bound,exact\n"));
    assert_eq!(text.lines().count(), 2);
    let o = blindid(&["smallball", "--rhos", "0.1", "--trials", "10"]);
    assert_eq!(o.status.code(), Some(2));
}
