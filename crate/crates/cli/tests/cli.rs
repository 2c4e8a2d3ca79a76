use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_quasifix"))
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn run_config(name: &str, out: &Path, extra: &[&str]) -> Output {
    let cfg = configs().join(name);
    let mut args = vec!["--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    args.extend(["run", cfg.to_str().unwrap()]);
    run(&args)
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Root of cos(x) = x by bisection.
fn cos_root() -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid.cos() - mid > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn solve_reports_the_cosine_fixed_point() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_config("cos_solve.json", dir.path(), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = read_json(&dir.path().join("report.json"));
    assert_eq!(r["version"], 1);
    assert_eq!(r["task"], "solve");
    assert_eq!(r["status"], "success");
    let x = r["result"]["solve"]["fixed_point"][0].as_f64().unwrap();
    assert!((x - cos_root()).abs() < 1e-8, "{x}");
    assert_eq!(r["result"]["uniqueness"]["unique_within"], true);
    assert!(!dir.path().join("trace.csv").exists());
}

#[test]
fn trace_flag_writes_the_solve_trace() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_config("cos_solve.json", dir.path(), &["--trace"]);
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert!(rows[0].starts_with("step,"), "{}", rows[0]);
    let iterations = read_json(&dir.path().join("report.json"))["result"]["solve"]["iterations"]
        .as_u64()
        .unwrap();
    assert_eq!(rows.len() as u64, iterations + 1);
}

#[test]
fn falsified_class_exits_two_with_a_witness() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_config("halving_classify.json", dir.path(), &[]);
    assert_eq!(o.status.code(), Some(2), "{}", stdout(&o));
    let r = read_json(&dir.path().join("report.json"));
    assert_eq!(r["status"], "negative");
    assert_eq!(r["result"]["outcome"], "falsified");
    let w = &r["result"]["witness"];
    let (x, y) = (w["x"][0].as_f64().unwrap(), w["y"][0].as_f64().unwrap());
    // x/2 against 0.4x: any distinct pair violates the bound.
    assert!(0.5 * (x - y).abs() > 0.4 * (x - y).abs());
}

#[test]
fn satisfied_class_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_config("kannan_classify.json", dir.path(), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(
        read_json(&dir.path().join("report.json"))["result"]["outcome"],
        "satisfied"
    );
}

#[test]
fn escaping_orbit_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_config("walk_probe.json", dir.path(), &[]);
    assert_eq!(o.status.code(), Some(2));
    let r = read_json(&dir.path().join("report.json"));
    assert_eq!(r["result"]["probe"]["verdict"], "threshold_exceeded");
    assert_eq!(r["result"]["probe"]["step"], 1000);
}

#[test]
fn missing_field_is_named_with_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(
        &cfg,
        r#"{"map":{"family":"builtin","name":"cos"},"task":{"kind":"solve","start":0,"eps":1e-6}}"#,
    )
    .unwrap();
    let o = run(&[
        "--out",
        dir.path().to_str().unwrap(),
        "run",
        cfg.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(
        stderr(&o).contains("missing field `space`"),
        "{}",
        stderr(&o)
    );
    assert!(!dir.path().join("report.json").exists());
}

#[test]
fn unknown_field_and_missing_file_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(
        &cfg,
        r#"{"space":{"kind":"euclidean"},"map":{"family":"builtin","name":"cos"},"task":{"kind":"solve","start":0,"eps":1e-6},"colour":1}"#,
    )
    .unwrap();
    let o = run(&["run", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("colour"));

    let o = run(&["run", dir.path().join("absent.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
}

#[test]
fn same_config_and_seed_give_identical_reports() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let o = run_config("kannan_classify.json", dir.path(), &["--seed", "42"]);
        assert_eq!(o.status.code(), Some(0));
    }
    let ra = std::fs::read(a.path().join("report.json")).unwrap();
    let rb = std::fs::read(b.path().join("report.json")).unwrap();
    assert_eq!(ra, rb);
    assert_eq!(read_json(&a.path().join("report.json"))["seed"], 42);
}

#[test]
fn attractor_exports_points_and_certificate() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_config("sierpinski_attractor.json", dir.path(), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = read_json(&dir.path().join("sierpinski.json"));
    let cert = &r["result"]["certificate"];
    let bound = cert["bound"].as_f64().unwrap();
    assert!(bound < 0.01);
    assert_eq!(cert["q"], 0.5);
    let csv = std::fs::read_to_string(dir.path().join("sierpinski.csv")).unwrap();
    let points: Vec<(f64, f64)> = csv
        .lines()
        .skip(1)
        .map(|l| {
            let mut it = l.split(',').map(|v| v.parse::<f64>().unwrap());
            (it.next().unwrap(), it.next().unwrap())
        })
        .collect();
    assert_eq!(points.len() as u64, r["result"]["points"].as_u64().unwrap());
    // Every point lies in the triangle with vertices (0,0), (1,0), (0.5,1).
    for (x, y) in points {
        assert!(
            y >= -1e-12 && y <= 2.0 * x + 1e-12 && y <= 2.0 * (1.0 - x) + 1e-12,
            "({x},{y})"
        );
    }
}

#[test]
fn picard_exports_the_solution_curve() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_config("picard_exp.json", dir.path(), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("picard.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,y"));
    let rows: Vec<(f64, f64)> = lines
        .map(|l| {
            let (t, y) = l.split_once(',').unwrap();
            (t.parse().unwrap(), y.parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 65);
    for (t, y) in rows {
        assert!((y - t.exp()).abs() < 5e-4, "y({t}) = {y}");
    }
}

#[test]
fn gallery_runs_every_entry() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["--out", dir.path().to_str().unwrap(), "gallery"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let text = stdout(&o);
    for label in [
        "arith_walk",
        "cantor",
        "cos",
        "halving",
        "harmonic",
        "identity",
        "kannan_like",
        "picard_exp",
        "sierpinski",
    ] {
        assert!(text.contains(label), "{label}");
        let r = read_json(&dir.path().join(format!("{label}.json")));
        assert_eq!(r["all_met"], true, "{label}");
    }
}

#[test]
fn gallery_filter_selects_by_glob() {
    let o = run(&["gallery", "--filter", "cos"]);
    assert_eq!(o.status.code(), Some(0));
    let rows: Vec<String> = stdout(&o).lines().skip(1).map(str::to_owned).collect();
    assert_eq!(rows.len(), 1, "{rows:?}");
    assert!(rows[0].starts_with("cos"));

    let o = run(&["gallery", "--filter", "h*"]);
    assert_eq!(stdout(&o).lines().count(), 3);

    let o = run(&["gallery", "--filter", "zzz"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("no entries"));
}
