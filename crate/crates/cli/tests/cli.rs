use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn cachesched(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cachesched")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn run_json_reports_bounds_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.csv");
    let out = cachesched(&["run", "-p", "tiny", "--seed", "4", "--json", "--trace", trace.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let du = v["delta_u"].as_f64().unwrap();
    let dl = v["delta_l"].as_f64().unwrap();
    assert!(dl <= du + 1e-9);
    assert!(v["gain_pct"].as_f64().unwrap() >= 0.0);
    let csv = fs::read_to_string(trace).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("iteration,delta_u,delta_l,beta_star,pool_size,ms"));
    assert_eq!(lines.count() as u64, v["iterations"].as_u64().unwrap());
}

#[test]
fn run_reads_a_config_file_with_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.toml", "profile = \"tiny\"\nseed = 9\nn_users = 2\nepsilon = 0.1\n");
    let out = cachesched(&["run", "-c", &cfg, "--epsilon", "0", "--json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["seed"], 9);
    assert_eq!(v["epsilon"], 0.0);
    assert_eq!(v["delta_u"], v["delta_l"]);
}

#[test]
fn sweep_emits_one_row_per_point() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "sweep.toml",
        "profile = \"tiny\"\naxis = \"n_users\"\nvalues = [1, 2, 3, 4]\nseeds = 5\n",
    );
    let csv = dir.path().join("out.csv");
    let out = cachesched(&["sweep", &cfg, "-q", "-o", csv.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 21);
    assert!(lines[0].starts_with("axis,axis_value,seed,status,delta_u"));
    assert!(lines[0].ends_with("pool_size,runtime_ms"));

    let again = cachesched(&["sweep", &cfg, "-q"]);
    let strip = |s: &str| -> Vec<String> {
        s.lines().map(|l| l.rsplit_once(',').unwrap().0.to_string()).collect()
    };
    assert_eq!(strip(&text), strip(&stdout(&again)));
}

#[test]
fn sweep_rejects_unsorted_values() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", "profile = \"tiny\"\naxis = \"n_sbs\"\nvalues = [3, 2]\n");
    let out = cachesched(&["sweep", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("increasing"));
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", "profile = \"tiny\"\ncache_byts = 1e9\n");
    let out = cachesched(&["run", "-c", &cfg]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn oracle_check_passes() {
    let out = cachesched(&["oracle-check", "--seeds", "5"]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("5 of 5 passed"));
}

#[test]
fn dump_graph_edge_list_header_matches_body() {
    let out = cachesched(&["dump-graph", "-p", "tiny", "--seed", "2"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let header = text.lines().next().unwrap();
    let edges: usize = header.rsplit(' ').next().unwrap().parse().unwrap();
    let body: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(body.len(), edges);
    for line in body {
        let (u, v) = line.split_once(' ').unwrap();
        assert!(u.parse::<usize>().unwrap() < v.parse::<usize>().unwrap());
    }
}

#[test]
fn dump_graph_lp_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rmp.lp");
    let out = cachesched(&["dump-graph", "-p", "tiny", "--format", "lp", "-o", path.to_str().unwrap()]);
    assert!(out.status.success());
    let text = fs::read_to_string(path).unwrap();
    assert!(text.starts_with("Minimize"));
    assert!(text.contains("Subject To"));
}
