use std::path::Path;
use std::process::{Command, Output};

fn phn(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_phn-hvvs"))
        .current_dir(dir)
        .env_remove("PHN_OUT_DIR")
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn train_writes_outputs_and_manifest_reruns_identically() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let o = phn(d, &["train", "--problem", "pro1", "--iterations", "150", "--out", "a"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("HV "));
    for f in ["run.json", "front.csv", "front.svg", "model.ckpt", "manifest.toml"] {
        assert!(d.join("a").join(f).exists(), "missing {f}");
    }
    let csv = std::fs::read_to_string(d.join("a/front.csv")).unwrap();
    assert!(csv.starts_with("# config: {"));
    let svg = std::fs::read_to_string(d.join("a/front.svg")).unwrap();
    assert!(svg.contains("<metadata>"));
    let manifest: toml::Table = std::fs::read_to_string(d.join("a/manifest.toml"))
        .unwrap()
        .parse()
        .unwrap();
    assert_eq!(manifest["command"].as_str(), Some("train"));
    assert!(manifest["timestamp"].as_integer().unwrap() > 1_600_000_000);
    assert_eq!(manifest["config"]["iterations"].as_integer(), Some(150));

    let o = phn(d, &["train", "--config", "a/manifest.toml", "--out", "b"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for f in ["front.csv", "run.json"] {
        let a = std::fs::read(d.join("a").join(f)).unwrap();
        let b = std::fs::read(d.join("b").join(f)).unwrap();
        assert_eq!(a, b, "{f} differs");
    }

    let o = phn(d, &["eval", "--checkpoint", "a/model.ckpt", "--out", "e"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let run: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.join("a/run.json")).unwrap()).unwrap();
    let ev: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.join("e/eval.json")).unwrap()).unwrap();
    assert_eq!(run["hv"], ev["hv"]);
}

#[test]
fn default_output_root_follows_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_phn-hvvs"))
        .current_dir(tmp.path())
        .env("PHN_OUT_DIR", "results")
        .args(["voronoi", "--dim", "2", "--sites", "4", "--generations", "2"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let dir = tmp.path().join("results/voronoi-d2-n4-s0");
    assert!(dir.join("partition.json").exists());
    assert!(dir.join("partition.manifest.toml").exists());
    assert!(stdout(&o).contains("fitness"));
}

#[test]
fn usage_errors_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    for args in [
        &["train", "--problem", "nope"][..],
        &["train"],
        &["train", "--problem", "pro1", "--lambda", "-1"],
        &["train", "--problem", "pro1", "--solver", "hvvs", "--reference", "1,2,3"],
        &["voronoi"],
        &["voronoi", "--dim", "1"],
        &["benefit-graph", "--clients", "1"],
        &["benefit-graph", "--overlap", "1.5"],
        &["bench", "--suite", "mnist"],
        &["frobnicate"],
    ] {
        let o = phn(d, args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
        assert!(!stderr(&o).is_empty());
    }
    std::fs::write(d.join("typo.toml"), "lamda = 0.1\n").unwrap();
    let o = phn(d, &["train", "--problem", "pro1", "--config", "typo.toml"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("lamda"));
}

#[test]
fn io_errors_exit_four() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let o = phn(d, &["eval", "--checkpoint", "missing.ckpt"]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains("missing.ckpt"));
    std::fs::write(d.join("junk.ckpt"), "not a checkpoint").unwrap();
    let o = phn(d, &["eval", "--checkpoint", "junk.ckpt"]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
    let o = phn(d, &["train", "--problem", "pro1", "--config", "absent.toml"]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn bench_reports_table_and_floor_failures() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    // ten iterations cannot reach the pro1 floor
    let o = phn(
        d,
        &[
            "bench", "--problems", "pro1", "--solvers", "ls,hvvs", "--runs", "2",
            "--iterations", "10", "--jobs", "3", "--out", "b",
        ],
    );
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("LS") && out.contains("HVVS") && out.contains("±"), "{out}");
    assert!(out.contains("FAIL"));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.join("b/bench.json")).unwrap()).unwrap();
    assert_eq!(summary["cells"].as_array().unwrap().len(), 4);
    assert!(d.join("b/cells/pro1-ls-s1.json").exists());
    assert!(d.join("b/bench.csv").exists());
}

#[test]
fn benefit_graph_without_overlap_is_diagonal() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let o = phn(d, &["benefit-graph", "--clients", "2", "--overlap", "0", "--out", "g"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("client 0: argmax 0"), "{out}");
    assert!(out.contains("client 1: argmax 1"), "{out}");
    let csv = std::fs::read_to_string(d.join("g/graph.csv")).unwrap();
    assert!(csv.starts_with("# config: "));
    assert!(d.join("g/benefit.json").exists());
}
