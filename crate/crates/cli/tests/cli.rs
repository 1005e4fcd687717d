use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use evbench_core::ingest::{write_events_binary, Polarity};
use evbench_core::{Event, EventStream};
use serde_json::Value;
use tempfile::TempDir;

fn evbench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_evbench"))
        .args(args)
        .output()
        .expect("run evbench")
}

fn ok_json(args: &[&str]) -> Value {
    let out = evbench(args);
    assert!(
        out.status.success(),
        "evbench {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("JSON on stdout")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

struct Fixture {
    dir: TempDir,
}

impl Fixture {
    fn new() -> Self {
        Self {
            dir: tempfile::tempdir().unwrap(),
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    /// Circle trajectory with exact velocities and a velocity estimate off by `vel_error`.
    fn circle(&self, vel_error: f64) {
        let out = evbench(&[
            "synth",
            "trajectory",
            "--pattern",
            "circle",
            "--duration",
            "10",
            "--hz",
            "120",
            "--out",
            p(&self.path("gt.txt")),
            "--vel-out",
            p(&self.path("gt_vel.txt")),
            "--est-out",
            p(&self.path("est.txt")),
            "--est-vel-out",
            p(&self.path("est_vel.txt")),
            "--vel-error",
            &vel_error.to_string(),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }

    fn stream(&self, name: &str, n: u64) -> PathBuf {
        let events = (0..n)
            .map(|i| Event::new(i as i64 * 10, (i % 64) as u16, (i % 48) as u16, Polarity::Positive))
            .collect();
        let s = EventStream::with_events(64, 48, name, events).unwrap();
        let path = self.path(name);
        write_events_binary(&s, std::fs::File::create(&path).unwrap()).unwrap();
        path
    }
}

#[test]
fn identical_estimate_scores_zero_ate_and_full_auc() {
    let f = Fixture::new();
    f.circle(0.0);
    let gt = f.path("gt.txt");
    let r = ok_json(&["evaluate", "--gt", p(&gt), "--est", p(&gt)]);
    assert_eq!(r["schema"], "evbench_report_v1");
    assert!(r["headline"]["ate"].as_f64().unwrap() < 1e-12);
    let auc = r["headline"]["auc"].as_f64().unwrap();
    assert!(1.0 - auc <= 1.0 / 256.0, "{auc}");
    for key in ["full_se3", "translation_only"] {
        assert!(r["ate"][key]["rms"].is_number());
        assert!(r["ate"][key]["paper_eq2"].is_number());
    }
    assert!(r["rpe"].is_object());
    assert!(r["alignment"]["rotation_wxyz"].is_array());
}

#[test]
fn ten_percent_velocity_error_gives_auc_point_nine() {
    let f = Fixture::new();
    f.circle(0.1);
    let svg = f.path("plots");
    let r = ok_json(&[
        "evaluate",
        "--gt",
        p(&f.path("gt.txt")),
        "--est",
        p(&f.path("est.txt")),
        "--gt-vel",
        p(&f.path("gt_vel.txt")),
        "--est-vel",
        p(&f.path("est_vel.txt")),
        "--svg",
        p(&svg),
    ]);
    let auc = r["headline"]["auc"].as_f64().unwrap();
    assert!((auc - 0.9).abs() <= 1.0 / 256.0, "{auc}");
    let curves = r["velocity"]["curves"].as_array().unwrap();
    assert_eq!(curves.len(), 3);
    let plot = std::fs::read_to_string(svg.join("est_precision.svg")).unwrap();
    for c in curves {
        assert!(plot.contains(&format!("AUC {}", c["auc"].as_f64().unwrap())));
    }
    assert!(svg.join("est_ate.svg").exists());
}

#[test]
fn options_are_echoed_into_the_report() {
    let f = Fixture::new();
    f.circle(0.0);
    let gt = f.path("gt.txt");
    let r = ok_json(&[
        "evaluate", "--gt", p(&gt), "--est", p(&gt), "--align", "sim3", "--agg", "paper-eq2",
        "--weights", "velocity", "--xi-max", "0.5", "--speed-floor", "0.1", "--seed", "9",
        "--sequence", "loop",
    ]);
    let c = &r["config"];
    assert_eq!(c["align"], "sim3");
    assert_eq!(c["aggregation"], "paper_eq2");
    assert_eq!(c["weights"], "velocity");
    assert_eq!(c["xi_max"], 0.5);
    assert_eq!(c["speed_floor"], 0.1);
    assert_eq!(c["seed"], 9);
    assert_eq!(c["sequence"], "loop");
    assert_eq!(c["inputs"]["gt"], p(&gt));
}

#[test]
fn evaluation_is_byte_identical_across_runs() {
    let f = Fixture::new();
    f.circle(0.05);
    let run = |out: &str| {
        let o = evbench(&[
            "evaluate",
            "--gt",
            p(&f.path("gt.txt")),
            "--est",
            p(&f.path("est.txt")),
            "--est",
            p(&f.path("gt.txt")),
            "--est-vel",
            p(&f.path("est_vel.txt")),
            "--est-vel",
            p(&f.path("gt_vel.txt")),
            "--out",
            p(&f.path(out)),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        std::fs::read(f.path(out)).unwrap()
    };
    let a = run("a.json");
    assert_eq!(a, run("b.json"));
    let v: Value = serde_json::from_slice(&a).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 2);
}

#[test]
fn missing_file_exits_two() {
    let f = Fixture::new();
    f.circle(0.0);
    let out = evbench(&["evaluate", "--gt", p(&f.path("gt.txt")), "--est", p(&f.path("nope.txt"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope.txt"));
    let out = evbench(&["diagnose", "--events", p(&f.path("missing.bin"))]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn disjoint_time_ranges_exit_three() {
    let f = Fixture::new();
    f.circle(0.0);
    let shifted: String = std::fs::read_to_string(f.path("gt.txt"))
        .unwrap()
        .lines()
        .map(|l| {
            if l.starts_with('#') {
                return format!("{l}\n");
            }
            let mut cols = l.split_whitespace();
            let t: f64 = cols.next().unwrap().parse().unwrap();
            let rest: Vec<&str> = cols.collect();
            format!("{} {}\n", t + 100.0, rest.join(" "))
        })
        .collect();
    std::fs::write(f.path("late.txt"), shifted).unwrap();
    let out = evbench(&["evaluate", "--gt", p(&f.path("gt.txt")), "--est", p(&f.path("late.txt"))]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn stereo_pair_reports_ratio_and_depth_table() {
    let f = Fixture::new();
    // Same ratio as 24.00M / 21.88M at a thousandth of the size.
    let left = f.stream("left.bin", 24_000);
    let right = f.stream("right.bin", 21_880);
    let maps = f.path("maps");
    let r = ok_json(&[
        "diagnose", "--events", p(&left), p(&right), "--window", "0.05", "--time-map-dir", p(&maps),
        "--fx", "520", "--baseline", "0.10", "--baseline", "0.25",
    ]);
    let ratio = r["stereo"]["ratio_percent"].as_f64().unwrap();
    assert!((ratio - 9.69).abs() < 0.005, "{ratio}");
    assert_eq!(r["stereo"]["inconsistent"], false);
    assert_eq!(r["streams"][0]["events"], 24_000);
    assert_eq!(r["streams"][0]["windowed"]["counts"][0], 5000);
    let depths: Vec<f64> = r["depth_bounds"]
        .as_array()
        .unwrap()
        .iter()
        .map(|d| d["max_depth"].as_f64().unwrap())
        .collect();
    assert!((depths[0] - 13.565).abs() < 5e-4 && (depths[1] - 33.913).abs() < 5e-4, "{depths:?}");
    let pgm = std::fs::read(maps.join("left_time_map.pgm")).unwrap();
    assert!(pgm.starts_with(b"P5\n64 48\n65535\n"));
}

#[test]
fn single_stream_omits_stereo() {
    let f = Fixture::new();
    let only = f.stream("solo.bin", 1000);
    let r = ok_json(&["diagnose", "--events", p(&only), "--window", "0.001"]);
    assert!(r.get("stereo").is_none_or(Value::is_null));
    assert_eq!(r["streams"][0]["camera_id"], "solo");
    assert_eq!(r["streams"][0]["windowed"]["counts"].as_array().unwrap().len(), 10);
}

#[test]
fn depth_bound_subcommand() {
    let r = ok_json(&["depth-bound", "--fx", "520", "--baseline", "0.10", "--baseline", "0.25"]);
    let rows = r.as_array().unwrap();
    assert!((rows[0]["min_disparity"].as_f64().unwrap() - 3.8333).abs() < 1e-4);
    assert!((rows[0]["max_depth"].as_f64().unwrap() - 13.565).abs() < 5e-4);
    assert!((rows[1]["max_depth"].as_f64().unwrap() - 33.913).abs() < 5e-4);
}

#[test]
fn flow_difficulty_from_vectors() {
    let f = Fixture::new();
    // 3-4-5 image, diagonal 5: magnitudes normalize to 0.2 and 0.6.
    std::fs::write(f.path("flow.txt"), "# u v\n0.6 0.8\n1.8 2.4\n").unwrap();
    let r = ok_json(&[
        "flow-difficulty", "--flow", p(&f.path("flow.txt")), "--width", "3", "--height", "4",
    ]);
    let norm: Vec<f64> = r["normalized"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    assert!((norm[0] - 0.2).abs() < 1e-12 && (norm[1] - 0.6).abs() < 1e-12);
    let auc = r["auc"].as_f64().unwrap();
    // Survival integrates to the mean normalized magnitude.
    assert!((auc - 0.4).abs() < 2.0 / 255.0, "{auc}");
}

#[test]
fn synth_events_step_and_offline_focus_replay() {
    let f = Fixture::new();
    for (name, seed) in [("l.bin", "1"), ("r.bin", "2")] {
        let out = evbench(&[
            "synth", "events", "--rate", "1000", "--step-to", "5000", "--step-at", "1", "--duration",
            "2", "--seed", seed, "--out", p(&f.path(name)),
        ]);
        assert!(out.status.success());
    }
    let out = evbench(&[
        "focus", "replay", "--left", p(&f.path("l.bin")), "--right", p(&f.path("r.bin")), "--offline",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let snaps: Vec<Value> = String::from_utf8(out.stdout)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert!(snaps.len() >= 19);
    let rate_at = |t: f64| {
        snaps
            .iter()
            .find(|s| (s["t"].as_f64().unwrap() - t).abs() < 1e-9)
            .unwrap()["left_rate"]
            .as_f64()
            .unwrap()
    };
    assert!(rate_at(0.5) < 2000.0);
    assert!(rate_at(1.5) > 3500.0);
}
