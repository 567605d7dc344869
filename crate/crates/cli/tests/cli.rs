use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use netctrl::graphgen::read_edge_list;
use serde_json::Value;

fn netctrl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_netctrl"))
        .args(args)
        .env_remove("NETCTRL_WORKERS")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn analyze(file: &str, extra: &[&str]) -> Value {
    let mut args = vec!["analyze", "--input", file];
    args.extend_from_slice(extra);
    let o = netctrl(&args);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    serde_json::from_str(&stdout(&o)).unwrap()
}

/// Numeric value following `key=` on a summary line.
fn field(line: &str, key: &str) -> f64 {
    line.split_whitespace()
        .find_map(|tok| tok.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("{key} missing in {line}"))
        .parse()
        .unwrap()
}

#[test]
fn help_exits_zero() {
    assert_eq!(code(&netctrl(&["--help"])), 0);
}

#[test]
fn unknown_command_is_usage_error() {
    assert_eq!(code(&netctrl(&["frobnicate"])), 2);
}

#[test]
fn gen_er_writes_header_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("g.edges");
    let o = netctrl(&["gen", "--family", "er", "--n", "12", "--p", "0.4", "--seed", "7", "--out", p(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().next().unwrap(), "n 12 directed weighted");
    let line = stdout(&o);
    assert!(line.starts_with("n=12 "), "{line}");
    assert_eq!(field(&line, "seed"), 7.0);
    let g = read_edge_list(text.as_bytes()).unwrap();
    assert_eq!(field(&line, "edges") as usize, g.edge_count());
    assert_eq!(field(&line, "arcs") as usize, g.arc_count());
}

#[test]
fn gen_is_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.edges");
    let b = dir.path().join("b.edges");
    for out in [&a, &b] {
        let args = ["gen", "--family", "ba", "--n", "12", "--seed", "11", "--noise", "unstructured", "--noise-k", "5"];
        let mut args = args.to_vec();
        args.extend(["--out", p(out)]);
        assert_eq!(code(&netctrl(&args)), 0);
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn gen_ws_has_no_isolated_vertex() {
    let dir = tempfile::tempdir().unwrap();
    for seed in 0..20 {
        let out = dir.path().join(format!("ws{seed}.edges"));
        let s = seed.to_string();
        let o = netctrl(&["gen", "--family", "ws", "--n", "12", "--k", "2", "--p", "0.5", "--seed", &s, "--out", p(&out)]);
        assert_eq!(code(&o), 0);
        let g = read_edge_list(fs::read(&out).unwrap().as_slice()).unwrap();
        assert_eq!(g.edge_count(), 24);
        assert!((0..12).all(|v| g.degree(v) >= 1));
    }
}

#[test]
fn gen_rejects_bad_probability_and_missing_seed() {
    assert_eq!(code(&netctrl(&["gen", "--family", "er", "--n", "12", "--p", "1.5", "--seed", "1"])), 2);
    assert_eq!(code(&netctrl(&["gen", "--family", "er", "--n", "12", "--p", "0.4"])), 2);
}

#[test]
fn gen_without_out_streams_edge_list() {
    let o = netctrl(&["gen", "--family", "er", "--n", "5", "--p", "1", "--seed", "1"]);
    assert_eq!(code(&o), 0);
    let g = read_edge_list(o.stdout.as_slice()).unwrap();
    assert_eq!(g.arc_count(), 20);
    assert!(stderr(&o).starts_with("n=5 edges=10 arcs=20 seed=1"));
}

#[test]
fn gen_unwritable_output_is_io_error() {
    let o = netctrl(&["gen", "--family", "er", "--n", "5", "--seed", "1", "--out", "/nonexistent/dir/g.edges"]);
    assert_eq!(code(&o), 3);
}

const PATH3: &str = "n 3 directed weighted\n0 1 1\n1 0 1\n1 2 1\n2 1 1\n";

#[test]
fn analyze_path_laplacian() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "path.edges", PATH3);
    let r = analyze(&f, &["--leaders", "2", "--representation", "laplacian"]);
    assert_eq!(r["controllable"], true);
    assert_eq!(r["rank"], 2);
    assert_eq!(r["subspace_dim"], 2);
    assert_eq!(r["N_D"], 1);
    assert_eq!(r["gamma"], 2);
    assert_eq!(r["representation"], "laplacian");
}

#[test]
fn analyze_example1_point_is_uncontrollable() {
    // a11 = a22 = 0, a12 = 1, a21 = 4, a13 = 1, a23 = 2: on the manifold.
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "ex1.edges", "n 3 directed weighted\n0 1 1\n1 0 4\n0 2 1\n1 2 2\n");
    let r = analyze(&f, &[]);
    assert_eq!(r["controllable"], false);
    assert_eq!(r["rank"], 1);
    // Nudging a23 leaves the manifold.
    let f = write(dir.path(), "ex1b.edges", "n 3 directed weighted\n0 1 1\n1 0 4\n0 2 1\n1 2 3\n");
    assert_eq!(analyze(&f, &[])["controllable"], true);
}

#[test]
fn analyze_complete_graph() {
    let dir = tempfile::tempdir().unwrap();
    let mut text = String::from("n 4 directed weighted\n");
    for i in 0..4 {
        for j in 0..4 {
            if i != j {
                text.push_str(&format!("{i} {j} 1\n"));
            }
        }
    }
    let f = write(dir.path(), "k4.edges", &text);
    let r = analyze(&f, &["--representation", "adjacency"]);
    assert_eq!(r["controllable"], false);
    assert_eq!(r["N_D"], 2);
    let clusters = r["spectrum"]["clusters"].as_array().unwrap();
    let minus_one = clusters.iter().find(|c| (c["re"].as_f64().unwrap() + 1.0).abs() < 1e-9).unwrap();
    assert_eq!(minus_one["alg"], 2);
    assert_eq!(minus_one["geo"], 2);
}

#[test]
fn analyze_json_schema_is_stable() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "path.edges", PATH3);
    let out = dir.path().join("r.json");
    let o = netctrl(&["analyze", "--input", &f, "--out", p(&out)]);
    assert_eq!(code(&o), 0);
    let r: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    let keys: Vec<&str> = r.as_object().unwrap().keys().map(String::as_str).collect();
    let mut expected = vec![
        "n",
        "n_followers",
        "leaders",
        "representation",
        "controllable",
        "rank",
        "subspace_dim",
        "krylov_dim",
        "N_D",
        "gamma",
        "spectrum",
        "tolerance",
    ];
    let mut keys_sorted = keys.clone();
    keys_sorted.sort_unstable();
    expected.sort_unstable();
    assert_eq!(keys_sorted, expected);
    let tol: Vec<&String> = r["tolerance"].as_object().unwrap().keys().collect();
    assert_eq!(tol.len(), 3);
    assert_eq!(r["tolerance"]["method"], "svd");
    let cluster = &r["spectrum"]["clusters"][0];
    for k in ["re", "im", "alg", "geo"] {
        assert!(cluster.get(k).is_some(), "{k}");
    }
    assert!(r["spectrum"]["cluster_tol"].as_f64().unwrap() > 0.0);
    // Second run is byte-identical.
    let out2 = dir.path().join("r2.json");
    netctrl(&["analyze", "--input", &f, "--out", p(&out2)]);
    assert_eq!(fs::read(&out).unwrap(), fs::read(&out2).unwrap());
}

#[test]
fn analyze_det_method_flag() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "path.edges", PATH3);
    let r = analyze(&f, &["--tol-method", "det", "--det-threshold", "1e-6"]);
    assert_eq!(r["tolerance"]["method"], "det");
    assert_eq!(r["tolerance"]["det_threshold"], 1e-6);
}

#[test]
fn analyze_errors() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&netctrl(&["analyze", "--input", "/nonexistent.edges"])), 3);
    let bad = write(dir.path(), "bad.edges", "n 3 directed weighted\n0 0 1\n");
    assert_eq!(code(&netctrl(&["analyze", "--input", &bad])), 2);
    let f = write(dir.path(), "path.edges", PATH3);
    assert_eq!(code(&netctrl(&["analyze", "--input", &f, "--leaders", "7"])), 2);
    assert_eq!(code(&netctrl(&["analyze", "--input", &f, "--n-leaders", "3"])), 2);
    assert_eq!(code(&netctrl(&["analyze", "--input", &f, "--rel-tol", "-1"])), 2);
}

const MINIMAL_SWEEP: &str = r#"{
  "graph": {"family": "er", "n": 8, "p": 0.4},
  "representation": "adjacency",
  "noise_mode": "structured",
  "n_followers": 7,
  "trials_per_k": 1
}"#;

#[test]
fn sweep_minimal_config_one_row_per_k() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "s.json", MINIMAL_SWEEP);
    let out = dir.path().join("s.csv");
    let o = netctrl(&["sweep", "--config", &cfg, "--seed", "5", "--out", p(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "family,representation,noise_mode,n_f,n_l,k,trials,uncontrollable,errors,pct,seed,tol_method,tol_value"
    );
    assert_eq!(lines.len(), 1 + 7);
    for l in &lines[1..] {
        let cols: Vec<&str> = l.split(',').collect();
        assert_eq!(cols.len(), 13);
        assert_eq!(&cols[..5], &["er", "adjacency", "structured", "7", "1"]);
        assert_eq!(cols[6], "1");
        assert_eq!(cols[10], "5");
    }
    assert!(stdout(&o).contains("trend_stat="));
}

#[test]
fn sweep_is_reproducible_across_runs_and_workers() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "s.json", MINIMAL_SWEEP);
    let mut files = Vec::new();
    for (i, workers) in ["1", "4", "4"].iter().enumerate() {
        let out = dir.path().join(format!("{i}.csv"));
        let o = netctrl(&["sweep", "--config", &cfg, "--seed", "9", "--trials", "40", "--workers", workers, "--out", p(&out)]);
        assert_eq!(code(&o), 0);
        files.push(fs::read(&out).unwrap());
    }
    assert_eq!(files[0], files[1]);
    assert_eq!(files[1], files[2]);
}

#[test]
fn sweep_workers_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "s.json", MINIMAL_SWEEP);
    let o = Command::new(env!("CARGO_BIN_EXE_netctrl"))
        .args(["sweep", "--config", &cfg, "--seed", "2"])
        .env("NETCTRL_WORKERS", "2")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    let reference = netctrl(&["sweep", "--config", &cfg, "--seed", "2", "--workers", "1"]);
    assert_eq!(o.stdout, reference.stdout);
}

#[test]
fn sweep_requires_a_seed_and_a_valid_schema() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "s.json", MINIMAL_SWEEP);
    assert_eq!(code(&netctrl(&["sweep", "--config", &cfg])), 2);
    let bad = write(dir.path(), "bad.json", &MINIMAL_SWEEP.replace("\"n_followers\": 7", "\"n_followers\": 6"));
    assert_eq!(code(&netctrl(&["sweep", "--config", &bad, "--seed", "1"])), 2);
    let unknown = write(dir.path(), "unk.json", &MINIMAL_SWEEP.replace("\"trials_per_k\"", "\"colour\": 1, \"trials_per_k\""));
    assert_eq!(code(&netctrl(&["sweep", "--config", &unknown, "--seed", "1"])), 2);
    let not_json = write(dir.path(), "x.json", "not json");
    assert_eq!(code(&netctrl(&["sweep", "--config", &not_json, "--seed", "1"])), 2);
    assert_eq!(code(&netctrl(&["sweep", "--config", "/nonexistent.json", "--seed", "1"])), 3);
}

#[test]
fn sweep_seed_in_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let with_seed = MINIMAL_SWEEP.replace("\"trials_per_k\": 1", "\"trials_per_k\": 30, \"master_seed\": 4");
    let cfg = write(dir.path(), "s.json", &with_seed);
    let from_file = netctrl(&["sweep", "--config", &cfg]);
    assert_eq!(code(&from_file), 0);
    let flag_same = netctrl(&["sweep", "--config", &cfg, "--seed", "4"]);
    assert_eq!(from_file.stdout, flag_same.stdout);
    let flag_other = netctrl(&["sweep", "--config", &cfg, "--seed", "5"]);
    let seeds: Vec<String> = stdout(&flag_other)
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(10).unwrap().to_string())
        .collect();
    assert!(seeds.iter().all(|s| s == "5"));
}

#[test]
fn sweep_array_writes_named_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!(
        "[{}, {}]",
        MINIMAL_SWEEP.replace("{\n  \"graph\"", "{\"name\": \"first\", \"graph\""),
        MINIMAL_SWEEP.replace("\"structured\"", "\"unstructured\"")
    );
    let cfg = write(dir.path(), "a.json", &cfg);
    let out = dir.path().join("outdir");
    let o = netctrl(&["sweep", "--config", &cfg, "--seed", "1", "--out", p(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(out.join("first.csv").exists());
    assert!(out.join("sweep_1.csv").exists());
    assert_eq!(stdout(&o).lines().count(), 2);
    // Several configs need a directory.
    assert_eq!(code(&netctrl(&["sweep", "--config", &cfg, "--seed", "1"])), 2);
}

#[test]
fn sweep_fig2_recipe_trends_upward() {
    let dir = tempfile::tempdir().unwrap();
    let mk = |name: &str, graph: &str| {
        format!(
            r#"{{"name": "{name}", "graph": {graph}, "representation": "adjacency", "noise_mode": "unstructured",
                "n_followers": 11, "trials_per_k": 2000, "master_seed": 1}}"#
        )
    };
    let cfg = format!(
        "[{}, {}, {}]",
        mk("er", r#"{"family": "er", "n": 12, "p": 0.4}"#),
        mk("ws", r#"{"family": "ws", "n": 12, "k": 2, "p": 0.5}"#),
        mk("ba", r#"{"family": "ba", "n": 12, "t": 8, "m": 3}"#)
    );
    let cfg = write(dir.path(), "fig2.json", &cfg);
    let out = dir.path().join("fig2");
    let o = netctrl(&["sweep", "--config", &cfg, "--out", p(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 3);
    for line in text.lines() {
        assert!(field(line, "trend_stat") > 0.0, "{line}");
    }
    for name in ["er", "ws", "ba"] {
        assert_eq!(fs::read_to_string(out.join(format!("{name}.csv"))).unwrap().lines().count(), 8);
    }
}

#[test]
fn steer_scalar_demo() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.csv");
    let o = netctrl(&["steer", "--demo", "scalar", "--out", p(&out)]);
    assert_eq!(code(&o), 0);
    assert!(field(&stdout(&o), "terminal_norm") <= 1e-10);
    let text = fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().next().unwrap(), "t,x_1,u_1");
    assert_eq!(text.lines().count(), 1 + 2001);
}

#[test]
fn steer_path_demo() {
    let o = netctrl(&["steer", "--demo", "path", "--x0", "1,-1"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let line = stdout(&o);
    assert!(field(&line, "terminal_norm") <= 1e-6 * field(&line, "x0_norm"));
}

#[test]
fn steer_from_edge_list() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "path.edges", PATH3);
    let out = dir.path().join("t.csv");
    let o = netctrl(&["steer", "--input", &f, "--representation", "laplacian", "--tau", "2", "--out", p(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let header = fs::read_to_string(&out).unwrap().lines().next().unwrap().to_string();
    assert_eq!(header, "t,x_1,x_2,u_1");
}

#[test]
fn steer_example1_reports_singular_gramian() {
    let o = netctrl(&["steer", "--demo", "example1"]);
    assert_eq!(code(&o), 5);
    assert!(stderr(&o).contains("reciprocal condition"), "{}", stderr(&o));
}

#[test]
fn steer_bad_arguments() {
    assert_eq!(code(&netctrl(&["steer"])), 2);
    assert_eq!(code(&netctrl(&["steer", "--demo", "path", "--x0", "1"])), 2);
    assert_eq!(code(&netctrl(&["steer", "--demo", "scalar", "--tau", "0"])), 2);
}

#[test]
fn verify_default_passes() {
    let o = netctrl(&["verify"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert_eq!(stdout(&o).lines().filter(|l| l.ends_with("PASS")).count(), 6);
}

#[test]
fn verify_named_suites() {
    let o = netctrl(&["verify", "--suite", "example1"]);
    assert_eq!(code(&o), 0);
    let line = stdout(&o);
    let tokens: Vec<&str> = line.split_whitespace().collect();
    assert_eq!(&tokens[..5], &["example1", "15625", "cases", "0", "mismatches"]);

    let o = netctrl(&["verify", "--suite", "jordan"]);
    assert_eq!(code(&o), 0);
    let tokens: Vec<String> = stdout(&o).split_whitespace().map(String::from).collect();
    assert_eq!(tokens[1], "100");
    assert_eq!(tokens[3], "0");

    assert_eq!(code(&netctrl(&["verify", "--suite", "bogus"])), 2);
}
