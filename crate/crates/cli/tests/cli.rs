use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use grm_cli::{read_matrix_csv, run_reduction, RunConfig};
use serde_json::Value;

fn grm(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_grm"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/tests/fixtures")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn two_cycle(dir: &Path) {
    fs::write(dir.join("c2.tsv"), "0\t1\n1\t0\n").unwrap();
    fs::write(dir.join("s.txt"), "0\n").unwrap();
}

fn json(path: PathBuf) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn rank_two_cycle() {
    let dir = tempfile::tempdir().unwrap();
    two_cycle(dir.path());
    let out = grm(&["rank", "c2.tsv", "--out", "r"], dir.path());
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    for name in ["pagerank.csv", "cheirank.csv"] {
        let text = fs::read_to_string(dir.path().join("r").join(name)).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("node_id,label,probability,rank"));
        let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
        assert_eq!(rows.len(), 2);
        for row in rows {
            assert_eq!(row[2].parse::<f64>().unwrap(), 0.5);
        }
    }
    let meta = json(dir.path().join("r/run.json"));
    assert_eq!(meta["nodes"], 2);
    assert_eq!(meta["alpha"], 0.85);
}

#[test]
fn missing_input_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = grm(&["rank", "does-not-exist.tsv"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("does-not-exist.tsv"));
}

#[test]
fn bad_flags_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    two_cycle(dir.path());
    assert_eq!(
        grm(&["rank", "c2.tsv", "--alpha", "1.5"], dir.path())
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        grm(&["rank", "c2.tsv", "--bogus"], dir.path())
            .status
            .code(),
        Some(2)
    );
    fs::write(dir.path().join("bad.txt"), "7\n").unwrap();
    let out = grm(&["reduce", "c2.tsv", "--subset", "bad.txt"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn solver_failure_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = grm(
        &["rank", &fixture("random_n100.tsv"), "--max-iter", "2"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("converge"));
}

#[test]
fn reduce_two_cycle_weights() {
    let dir = tempfile::tempdir().unwrap();
    two_cycle(dir.path());
    let out = grm(
        &["reduce", "c2.tsv", "--subset", "s.txt", "--out", "d"],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let w = json(dir.path().join("d/weights.json"));
    let get = |k: &str| w[k].as_f64().unwrap();
    assert!((get("W_rr") - 0.075).abs() < 1e-15);
    assert!((get("W_pr") - 0.925).abs() < 1e-15);
    assert_eq!(get("W_qr"), 0.0);
    assert!((get("lambda_c") - 0.075).abs() < 1e-15);
    for name in [
        "GR.csv",
        "Grr.csv",
        "Gpr.csv",
        "Gqr.csv",
        "Gqrnd.csv",
        "ranks.csv",
    ] {
        assert!(dir.path().join("d").join(name).exists(), "{name}");
    }
}

#[test]
fn reduce_weights_close_on_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let out = grm(
        &[
            "reduce",
            &fixture("random_n100.tsv"),
            "--subset",
            &fixture("random_n100_subset.txt"),
            "--out",
            "d",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let w = json(dir.path().join("d/weights.json"));
    let total: f64 = ["W_rr", "W_pr", "W_qr"]
        .iter()
        .map(|k| w[k].as_f64().unwrap())
        .sum();
    assert!((total - 1.0).abs() < 1e-12);
    let ranks = fs::read_to_string(dir.path().join("d/ranks.csv")).unwrap();
    assert!(ranks.starts_with("position,node_id,label,K,K_star,K_G,"));
    assert_eq!(ranks.lines().count(), 7);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let input = fixture("random_n100.tsv");
    for out in ["a", "b"] {
        assert!(grm(&["rank", &input, "--out", out], dir.path())
            .status
            .success());
    }
    for name in ["pagerank.csv", "cheirank.csv", "run.json"] {
        let a = fs::read(dir.path().join("a").join(name)).unwrap();
        let b = fs::read(dir.path().join("b").join(name)).unwrap();
        assert_eq!(a, b, "{name}");
    }
}

#[test]
fn matrices_round_trip_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let out = grm(
        &[
            "reduce",
            &fixture("random_n100.tsv"),
            "--subset",
            &fixture("random_n100_subset.txt"),
            "--out",
            "d",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let config = RunConfig {
        input: Some(fixture("random_n100.tsv").into()),
        subset: Some(fixture("random_n100_subset.txt").into()),
        ..RunConfig::default()
    };
    let run = run_reduction(&config).unwrap();
    let dec = run.decomposition;
    for (name, m) in [
        ("GR.csv", &dec.g_r),
        ("Grr.csv", &dec.g_rr),
        ("Gpr.csv", &dec.g_pr),
        ("Gqr.csv", &dec.g_qr),
        ("Gqrnd.csv", &dec.g_qrnd()),
    ] {
        let back = read_matrix_csv(&dir.path().join("d").join(name)).unwrap();
        assert_eq!(back.as_slice(), m.as_slice(), "{name}");
    }
}

#[test]
fn density_single_node() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("one.tsv"), "0\t0\n").unwrap();
    assert!(grm(&["density", "one.tsv", "--out", "o"], dir.path())
        .status
        .success());
    assert_eq!(
        fs::read_to_string(dir.path().join("o/density.csv")).unwrap(),
        "1\n"
    );
}

#[test]
fn density_cells_sum_to_node_count() {
    let dir = tempfile::tempdir().unwrap();
    for grid in ["1", "7", "100"] {
        let out = grm(
            &[
                "density",
                &fixture("random_n100.tsv"),
                "--grid",
                grid,
                "--out",
                grid,
            ],
            dir.path(),
        );
        assert!(out.status.success());
        let text = fs::read_to_string(dir.path().join(grid).join("density.csv")).unwrap();
        let total: u64 = text
            .lines()
            .flat_map(|l| l.split(','))
            .map(|v| v.parse::<u64>().unwrap())
            .sum();
        assert_eq!(total, 100);
        let axes = fs::read_to_string(dir.path().join(grid).join("density_axes.csv")).unwrap();
        assert_eq!(axes.lines().count(), 1 + grid.parse::<usize>().unwrap());
    }
}

#[test]
fn subnet_from_matrix_file() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("p.txt"), "0\n").unwrap();
    let out = grm(
        &[
            "subnet",
            "--matrix-file",
            &fixture("subnet_m5.csv"),
            "--primaries",
            "p.txt",
            "--topk",
            "2",
            "--levels",
            "2",
            "--out",
            "n",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let net = json(dir.path().join("n/subnet.json"));
    assert_eq!(net["levels"], serde_json::json!([[0], [1, 3], [2]]));
    let pairs: Vec<(u64, u64)> = net["edges"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| (e["from"].as_u64().unwrap(), e["to"].as_u64().unwrap()))
        .collect();
    assert_eq!(pairs, vec![(0, 1), (0, 3), (1, 2), (1, 3), (3, 1), (3, 2)]);
    assert_eq!(net["edges"][0]["weight"], 0.2);
    let dot = fs::read_to_string(dir.path().join("n/subnet.dot")).unwrap();
    assert!(dot.starts_with("digraph subnet {"));
    assert!(dot.contains("n0 -> n1 [level=1, weight_value=2.0000000000000001e-1"));
}

#[test]
fn subnet_from_graph_uses_labels() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("g.tsv"),
        "Paris\tFrance\nFrance\tParis\nLyon\tFrance\nFrance\tLyon\nNice, city\tFrance\nLyon\tParis\nParis\tNice, city\n",
    )
    .unwrap();
    fs::write(dir.path().join("s.txt"), "Paris\nLyon\nNice, city\n").unwrap();
    let out = grm(
        &[
            "subnet", "g.tsv", "--subset", "s.txt", "--topk", "1", "--out", "n",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let net = json(dir.path().join("n/subnet.json"));
    assert_eq!(net["matrix"], "GR");
    assert_eq!(net["nodes"][0]["name"], "Paris");

    let out = grm(&["rank", "g.tsv", "--out", "r"], dir.path());
    assert!(out.status.success());
    let text = fs::read_to_string(dir.path().join("r/pagerank.csv")).unwrap();
    assert!(text.contains("\"Nice, city\""));
}

#[test]
fn cache_reload_matches_text() {
    let dir = tempfile::tempdir().unwrap();
    let input = fixture("random_n100.tsv");
    assert!(grm(&["cache", &input, "g.bin"], dir.path())
        .status
        .success());
    assert!(grm(&["rank", &input, "--out", "a"], dir.path())
        .status
        .success());
    assert!(grm(&["rank", "g.bin", "--out", "b"], dir.path())
        .status
        .success());
    for name in ["pagerank.csv", "cheirank.csv"] {
        assert_eq!(
            fs::read(dir.path().join("a").join(name)).unwrap(),
            fs::read(dir.path().join("b").join(name)).unwrap()
        );
    }
}

#[test]
fn invert_swaps_pagerank_and_cheirank() {
    let dir = tempfile::tempdir().unwrap();
    let input = fixture("random_n100.tsv");
    assert!(grm(&["rank", &input, "--out", "a"], dir.path())
        .status
        .success());
    assert!(grm(&["rank", &input, "--invert", "--out", "b"], dir.path())
        .status
        .success());
    assert_eq!(
        fs::read(dir.path().join("a/pagerank.csv")).unwrap(),
        fs::read(dir.path().join("b/cheirank.csv")).unwrap()
    );
}
