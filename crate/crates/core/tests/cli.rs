mod common;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};

use common::{dir_digest, navgen, navgen_ok, navigable_pair};
use navgen::cli::BenchResult;
use tempfile::TempDir;

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn scenes(root: &Path, count: usize) -> PathBuf {
    let dir = root.join("scenes");
    navgen_ok(&["scene", "gen", "--count", &count.to_string(), "--seed", "5", "--out", p(&dir)]);
    dir
}

fn twice(root: &Path, name: &str, f: impl Fn(&Path)) -> (String, String) {
    let (a, b) = (root.join(format!("{name}_a")), root.join(format!("{name}_b")));
    f(&a);
    f(&b);
    (dir_digest(&a), dir_digest(&b))
}

#[test]
fn scene_gen_and_esdf_repeat_exactly() {
    let tmp = TempDir::new().unwrap();
    let (a, b) = twice(tmp.path(), "scenes", |out| {
        navgen_ok(&["scene", "gen", "--count", "3", "--seed", "9", "--out", p(out)]);
    });
    assert_eq!(a, b);
    let files = navgen::cli::scene_files(&tmp.path().join("scenes_a")).unwrap();
    assert_eq!(files.len(), 3);

    let scene = files[0].clone();
    let (a, b) = twice(tmp.path(), "esdf", |out| {
        navgen_ok(&["esdf", "--scene", p(&scene), "--height", "0.5", "--out", p(out)]);
    });
    assert_eq!(a, b);
    let dump = std::fs::read(tmp.path().join("esdf_a/esdf.bin")).unwrap();
    assert!(navgen::esdf::decode_esdf_dump(&dump).is_ok());
}

#[test]
fn plan_repeats_and_writes_a_valid_trajectory() {
    let tmp = TempDir::new().unwrap();
    let dir = scenes(tmp.path(), 1);
    let scene = dir.join("scene_000.json");
    let (s, g) = navigable_pair(&scene, 0.6, 4.0);
    let (start, goal) = (format!("{},{}", s[0], s[1]), format!("{},{}", g[0], g[1]));
    let (a, b) = twice(tmp.path(), "plan", |out| {
        navgen_ok(&["plan", "--scene", p(&scene), "--start", &start, "--goal", &goal, "--out", p(out)]);
    });
    assert_eq!(a, b);
    let text = std::fs::read_to_string(tmp.path().join("plan_a/trajectory.json")).unwrap();
    let t: navgen::planner::Trajectory = serde_json::from_str(&text).unwrap();
    assert!(t.arc_length() >= 4.0 - 1e-9);
}

#[test]
fn generate_label_and_stats_repeat_exactly() {
    let tmp = TempDir::new().unwrap();
    let dir = scenes(tmp.path(), 2);
    let (a, b) = twice(tmp.path(), "gen", |out| {
        navgen_ok(&["generate", "--scenes", p(&dir), "--seed", "3", "--per-scene-pairs", "12", "--out", p(out)]);
    });
    assert_eq!(a, b);

    let data = tmp.path().join("gen_a/records.ndjson");
    let (a, b) = twice(tmp.path(), "label", |out| {
        navgen_ok(&["label", "--dataset", p(&data), "--scenes", p(&dir), "--seed", "3", "--out", p(out)]);
    });
    assert_eq!(a, b);
    let labels = std::fs::read_to_string(tmp.path().join("label_a/records.labels.ndjson")).unwrap();
    let (_, records) = navgen::dataset::read_dataset(&data).unwrap();
    assert_eq!(labels.lines().count(), 4 * records.len());

    let (a, b) = twice(tmp.path(), "stats", |out| {
        navgen_ok(&["stats", p(&tmp.path().join("gen_a")), "--out", p(out)]);
    });
    assert_eq!(a, b);
}

#[test]
fn generate_respects_per_scene_pairs() {
    let tmp = TempDir::new().unwrap();
    let dir = scenes(tmp.path(), 2);
    let out = tmp.path().join("gen");
    navgen_ok(&["generate", "--scenes", p(&dir), "--per-scene-pairs", "7", "--out", p(&out)]);
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    let per_scene: Vec<u64> = manifest["scenes"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s["trajectories"].as_u64().unwrap())
        .collect();
    assert_eq!(per_scene.len(), 2);
    assert!(per_scene.iter().all(|&n| n <= 7 && n > 0));
    assert_eq!(manifest["total_trajectories"].as_u64().unwrap(), per_scene.iter().sum::<u64>());
}

#[test]
fn worker_count_does_not_change_artifacts() {
    let tmp = TempDir::new().unwrap();
    let dir = scenes(tmp.path(), 2);
    let run = |workers: &str, name: &str| {
        let out = tmp.path().join(name);
        navgen_ok(&["--workers", workers, "generate", "--scenes", p(&dir), "--per-scene-pairs", "10", "--out", p(&out)]);
        dir_digest(&out)
    };
    assert_eq!(run("1", "w1"), run("3", "w3"));
}

#[test]
fn eval_repeats_exactly() {
    let tmp = TempDir::new().unwrap();
    scenes(tmp.path(), 1);
    let config = tmp.path().join("eval.json");
    std::fs::write(&config, r#"{"scenes": ["scenes"], "task": "pointgoal", "n_spawns": 3, "seed": 2}"#).unwrap();
    let (a, b) = twice(tmp.path(), "eval", |out| {
        let o = navgen_ok(&["eval", "--config", p(&config), "--policy", "expert", "--out", p(out)]);
        assert!(String::from_utf8_lossy(&o.stdout).contains("overall sr"));
    });
    assert_eq!(a, b);
    let csv = std::fs::read_to_string(tmp.path().join("eval_a/metrics.csv")).unwrap();
    assert!(csv.lines().next().unwrap().contains("spl"));
    assert_eq!(csv.lines().count(), 2);
}

#[test]
fn bench_digest_repeats() {
    let tmp = TempDir::new().unwrap();
    let read = |name: &str| -> BenchResult {
        let out = tmp.path().join(name);
        navgen_ok(&["bench", "--trajectories", "15", "--seed", "1", "--out", p(&out)]);
        serde_json::from_str(&std::fs::read_to_string(out.join("bench.json")).unwrap()).unwrap()
    };
    let (a, b) = (read("a"), read("b"));
    assert_eq!(a.digest, b.digest);
    assert_eq!(a.requested, 15);
    assert_eq!(a.trajectories + a.failures, 15);
}

#[test]
fn echo_policy_answers_the_same_way() {
    let input = concat!(
        r#"{"type":"hello","version":1,"obs_shape":[48,64]}"#,
        "\n",
        r#"{"type":"obs","t":0.0,"depth":[1.0,2.0],"goal":null}"#,
        "\n",
    );
    let run = || {
        let mut child = Command::new(env!("CARGO_BIN_EXE_navgen"))
            .arg("echo-policy")
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()
            .unwrap();
        child.stdin.take().unwrap().write_all(input.as_bytes()).unwrap();
        let out = child.wait_with_output().unwrap();
        assert!(out.status.success());
        out.stdout
    };
    let a = run();
    assert_eq!(a, run());
    let text = String::from_utf8(a).unwrap();
    assert!(text.lines().next().unwrap().contains("ready"));
    assert!(text.lines().nth(1).unwrap().contains("act"));
}

fn code(args: &[&str]) -> (i32, String) {
    let out = navgen(args);
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stderr).into_owned())
}

#[test]
fn exit_codes_follow_error_class() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("x");

    assert_eq!(code(&["generate", "--bogus"]).0, 2);
    let dir = scenes(tmp.path(), 1);
    let config = tmp.path().join("eval.json");
    std::fs::write(&config, r#"{"scenes": ["scenes"], "task": "nogoal", "n_spawns": 1, "seed": 0}"#).unwrap();
    let (c, err) = code(&["eval", "--config", p(&config), "--policy", "oracle", "--out", p(&out)]);
    assert_eq!(c, 2, "{err}");
    assert!(err.starts_with("error code=2"));

    let (c, err) = code(&["esdf", "--scene", p(&tmp.path().join("missing.json")), "--out", p(&out)]);
    assert_eq!(c, 3, "{err}");
    assert!(err.contains("kind=missing-input"));

    let crowded = tmp.path().join("crowded.json");
    std::fs::write(&crowded, r#"{"obstacle_count": 400, "min_gap": 3.0, "max_attempts": 50}"#).unwrap();
    let (c, err) = code(&["scene", "gen", "--config", p(&crowded), "--out", p(&out)]);
    assert_eq!(c, 4, "{err}");

    let (c, err) = code(&[
        "eval",
        "--config",
        p(&config),
        "--policy",
        "remote:/nonexistent/policy-server",
        "--out",
        p(&out),
    ]);
    assert_eq!(c, 5, "{err}");
    assert!(err.contains("kind=policy-failure"));
    assert!(dir.exists());
}

#[test]
fn stats_of_empty_dataset_is_zero() {
    let tmp = TempDir::new().unwrap();
    let dir = scenes(tmp.path(), 1);
    let gen = tmp.path().join("gen");
    navgen_ok(&["generate", "--scenes", p(&dir), "--per-scene-pairs", "0", "--out", p(&gen)]);
    let out = tmp.path().join("stats");
    let o = navgen_ok(&["stats", p(&gen.join("records.ndjson")), "--out", p(&out)]);
    assert!(String::from_utf8_lossy(&o.stdout).lines().count() == 2);
    let stats: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("stats.json")).unwrap()).unwrap();
    assert_eq!(stats["records"], 0);
    assert_eq!(stats["trajectories"], 0);
    assert_eq!(stats["scenes"], 0);
    assert_eq!(stats["total_distance_km"], 0.0);
}
