mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use common::fixture_dir;

fn staymatch(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_staymatch"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

const STRAIGHT_NET: &str = "edge_id,node_from,node_to,wkt\n\
    a,n0,n1,\"LINESTRING(-122.3 47.6, -122.29 47.6)\"\n\
    b,n1,n2,\"LINESTRING(-122.29 47.6, -122.29 47.61)\"\n";

fn straight_traj() -> String {
    let mut body = String::from("timestamp,lat,lon\n");
    for i in 0..40 {
        body.push_str(&format!(
            "{},{},{}\n",
            1000 + i,
            47.60002,
            -122.2995 + i as f64 * 0.0002
        ));
    }
    body
}

#[test]
fn help_and_version_exit_zero() {
    let o = staymatch(&["--help"]);
    assert_eq!(code(&o), 0);
    for sub in [
        "knn-curve",
        "staypoints",
        "reduce",
        "match",
        "eval",
        "pipeline",
        "synth",
    ] {
        assert!(stdout(&o).contains(sub), "help lacks {sub}");
    }
    assert_eq!(code(&staymatch(&["--version"])), 0);
    let o = staymatch(&["pipeline", "--help"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("repo default, not from the paper"));
}

#[test]
fn knn_curve_writes_csv_and_checks_k() {
    let dir = tempfile::tempdir().unwrap();
    let traj = write(dir.path(), "t.csv", &straight_traj());
    let out = dir.path().join("curve.csv");
    let o = staymatch(&["knn-curve", "--traj", &traj, "--k", "3", "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let curve = fs::read_to_string(&out).unwrap();
    assert!(curve.starts_with("rank,distance\n1,"));
    assert_eq!(curve.lines().count(), 41);
    assert_eq!(stdout(&o).lines().count(), 6);

    let o = staymatch(&["knn-curve", "--traj", &traj, "--out", s(&out)]);
    assert_eq!(code(&o), 1);

    let o = staymatch(&["knn-curve", "--traj", &traj, "--k", "40", "--out", s(&out)]);
    assert_eq!(code(&o), 2);
    assert!(
        stderr(&o).contains("smaller than the number of points"),
        "{}",
        stderr(&o)
    );
}

#[test]
fn staypoints_outputs_and_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let traj = s(&fixture_dir().join("trajectory.csv")).to_string();
    let out = dir.path().join("sp");
    let o = staymatch(&[
        "staypoints",
        "--traj",
        &traj,
        "--eps",
        "0.00002",
        "--min-pts",
        "3",
        "--out-dir",
        s(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains(&format!("cluster_count={}", common::mini::CLUSTERS)));
    assert!(text.contains(&format!("noise_count={}", common::mini::NOISE)));
    assert!(text.contains(&format!("output_size={}", common::mini::REDUCED)));
    for f in ["labels.csv", "staypoints.csv", "reduced.csv"] {
        assert!(out.join(f).exists(), "{f} missing");
    }
    let labels = fs::read_to_string(out.join("labels.csv")).unwrap();
    assert!(labels.starts_with("source_index,label,core\n"));
    let stays = fs::read_to_string(out.join("staypoints.csv")).unwrap();
    assert!(stays.starts_with("cluster_id,lat,lon,t_arrive,t_leave,count\n"));

    let o = staymatch(&[
        "staypoints",
        "--traj",
        &traj,
        "--eps",
        "0",
        "--min-pts",
        "3",
        "--out-dir",
        s(&out),
    ]);
    assert_eq!(code(&o), 1);
    let fresh = dir.path().join("never");
    let o = staymatch(&[
        "staypoints",
        "--traj",
        "/nonexistent.csv",
        "--eps",
        "0",
        "--min-pts",
        "3",
        "--out-dir",
        s(&fresh),
    ]);
    assert_eq!(code(&o), 1, "parameters are checked before files");
    assert!(!fresh.exists());
}

#[test]
fn all_noise_reduction_is_identity() {
    let dir = tempfile::tempdir().unwrap();
    let traj = write(dir.path(), "t.csv", &straight_traj());
    let out = dir.path().join("r.csv");
    let o = staymatch(&[
        "reduce",
        "--traj",
        &traj,
        "--eps",
        "0.000001",
        "--min-pts",
        "3",
        "--out",
        s(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(fs::read_to_string(&out).unwrap(), straight_traj());
}

#[test]
fn match_straight_road_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let net = write(dir.path(), "net.csv", STRAIGHT_NET);
    let traj = write(dir.path(), "t.csv", &straight_traj());
    let (o1, o2) = (dir.path().join("m1"), dir.path().join("m2"));
    for out in [&o1, &o2] {
        let o = staymatch(&[
            "match",
            "--network",
            &net,
            "--traj",
            &traj,
            "--out-dir",
            s(out),
        ]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        assert!(stdout(&o).contains("wall_time_s="));
    }
    let seq = fs::read_to_string(o1.join("edge_sequence.txt")).unwrap();
    assert_eq!(seq, "a\n");
    for f in ["matched.csv", "edge_sequence.txt"] {
        assert_eq!(fs::read(o1.join(f)).unwrap(), fs::read(o2.join(f)).unwrap());
    }
    let matched = fs::read_to_string(o1.join("matched.csv")).unwrap();
    assert!(matched
        .starts_with("source_index,edge_id,offset_m,snapped_lat,snapped_lon,likelihood,phase\n"));
}

#[test]
fn match_error_codes() {
    let dir = tempfile::tempdir().unwrap();
    let traj = write(dir.path(), "t.csv", &straight_traj());
    let bad = write(
        dir.path(),
        "bad.csv",
        "edge_id,node_from,node_to,wkt\na,n0,n1,\"LINESTRING(-122.3 47.6, -122.29 47.6)\"\nb,n1,n2,\"LINESTRING(oops)\"\n",
    );
    let out = dir.path().join("m");
    let o = staymatch(&[
        "match",
        "--network",
        &bad,
        "--traj",
        &traj,
        "--out-dir",
        s(&out),
    ]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));

    let net = write(dir.path(), "net.csv", STRAIGHT_NET);
    let one = write(
        dir.path(),
        "one.csv",
        "timestamp,lat,lon\n1,47.60002,-122.2995\n",
    );
    let o = staymatch(&[
        "match",
        "--network",
        &net,
        "--traj",
        &one,
        "--out-dir",
        s(&out),
    ]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));

    let cfg = write(dir.path(), "cfg.toml", "[matcher]\nunknown_key = 1\n");
    let o = staymatch(&[
        "match",
        "--network",
        &net,
        "--traj",
        &traj,
        "--config",
        &cfg,
        "--out-dir",
        s(&out),
    ]);
    assert_eq!(code(&o), 2);
}

#[test]
fn eval_counts_ordered_matches() {
    let dir = tempfile::tempdir().unwrap();
    let seq = write(dir.path(), "seq.txt", "a\nx\nb\nd\n");
    let truth = write(dir.path(), "truth.txt", "edge_id\na\nb\nc\nd\n");
    let o = staymatch(&["eval", "--sequence", &seq, "--truth", &truth]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("correct_links=3"));
    assert!(stdout(&o).contains("total_truth_links=4"));
}

#[test]
fn pipeline_on_synthetic_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in");
    let o = staymatch(&[
        "synth",
        "--seed",
        "5",
        "--road-count",
        "6",
        "--dwell",
        "20:90:1.5",
        "--dwell",
        "60:90:1.5",
        "--out-dir",
        s(&input),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = dir.path().join("out");
    let o = staymatch(&[
        "pipeline",
        "--network",
        s(&input.join("network.csv")),
        "--traj",
        s(&input.join("trajectory.csv")),
        "--truth",
        s(&input.join("truth.csv")),
        "--eps",
        "0.00002",
        "--min-pts",
        "3",
        "--sweep",
        "0.00001,0.00002,0.00004",
        "--out-dir",
        s(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = stdout(&o);
    for key in [
        "volume_reduction_pct=",
        "time_reduction_pct=",
        "speed_gain_pct=",
        "accuracy_delta=",
    ] {
        assert!(text.contains(key), "missing {key}");
    }
    let summary = staymatch::eval::read_report(out.join("report.toml")).unwrap();
    assert!(summary.report.accuracy_delta >= 0);
    assert!(summary.report.volume_reduction_pct > 0.0);
    assert_eq!(
        fs::read_to_string(out.join("eps_sweep.csv"))
            .unwrap()
            .lines()
            .count(),
        4
    );

    let o = staymatch(&[
        "pipeline",
        "--network",
        s(&input.join("network.csv")),
        "--traj",
        s(&input.join("trajectory.csv")),
        "--truth",
        s(&dir.path().join("missing.csv")),
        "--eps",
        "0.00002",
        "--min-pts",
        "3",
        "--out-dir",
        s(&out),
    ]);
    assert_eq!(code(&o), 2);
}
