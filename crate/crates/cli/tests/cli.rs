use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::NamedTempFile;

fn robot() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/theories/robot1d.bat")
}

fn degbel(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_degbel"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn theory_file(text: &str) -> NamedTempFile {
    let mut f = NamedTempFile::with_suffix(".bat").unwrap();
    f.write_all(text.as_bytes()).unwrap();
    f
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_str(&stdout(o)).unwrap_or_else(|e| panic!("{e}: {:?}", stdout(o)))
}

#[test]
fn check_accepts_the_sample_theory() {
    let o = degbel(&["check", robot().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("robot1d: ok"));
}

#[test]
fn check_prints_diagnostics_for_a_bad_stddev() {
    let f = theory_file("theory bad\nfluent h : real\ninit h ~ gaussian(mean = 0, stddev = -1)\n");
    let o = degbel(&["check", "--theory", f.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("DSL004"), "{}", stderr(&o));
}

#[test]
fn missing_file_is_an_io_error() {
    let o = degbel(&["check", "/definitely/not/here.bat"]);
    assert_eq!(o.status.code(), Some(2));
    let o = degbel(&["bel", "--theory", "/definitely/not/here.bat", "--query", "h <= 1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn prior_belief() {
    let o = degbel(&[
        "bel",
        "--theory",
        robot().to_str().unwrap(),
        "--history",
        "",
        "--query",
        "h <= 7",
        "--format",
        "json",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v = json(&o);
    assert!((v["belief"].as_f64().unwrap() - 0.5).abs() < 1e-9);
    for key in ["belief", "gamma", "abs_error", "dimension", "evaluations"] {
        assert!(v.get(key).is_some(), "missing {key} in {v}");
    }
    assert_eq!(v.as_object().unwrap().len(), 5);
}

#[test]
fn belief_after_a_reading() {
    let o = degbel(&[
        "bel",
        "--theory",
        robot().to_str().unwrap(),
        "--history",
        "sonar()=5",
        "--query",
        "h <= 5",
        "--format",
        "json",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let b = json(&o)["belief"].as_f64().unwrap();
    assert!((b - 0.49932494).abs() < 1e-4, "{b}");
}

#[test]
fn every_strategy_answers() {
    let robot = robot();
    for strategy in ["regress-quad", "grid", "particle"] {
        let o = degbel(&[
            "bel",
            "--theory",
            robot.to_str().unwrap(),
            "--history",
            "fwd(2)",
            "--query",
            "h <= 4",
            "--strategy",
            strategy,
            "--format",
            "json",
        ]);
        assert_eq!(o.status.code(), Some(0), "{strategy}: {}", stderr(&o));
        let b = json(&o)["belief"].as_f64().unwrap();
        assert!((b - 0.4).abs() < 5e-3, "{strategy}: {b}");
    }
}

#[test]
fn impossible_histories_exit_3() {
    let o = degbel(&[
        "bel",
        "--theory",
        robot().to_str().unwrap(),
        "--history",
        "fwd(30); sonar()=1",
        "--query",
        "h <= 1",
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("history has zero weight"));

    let f = theory_file(
        "theory door\nfluent d : real\ninit d ~ discrete(0: 0.5, 1: 0.5)\n\
         action peek() senses z {\n  likelihood discrete(0: 0.2, 1: 0.8)\n}\n",
    );
    for strategy in ["regress-quad", "grid", "particle"] {
        let o = degbel(&[
            "bel",
            "--theory",
            f.path().to_str().unwrap(),
            "--history",
            "peek()=3",
            "--query",
            "d >= 1",
            "--strategy",
            strategy,
        ]);
        assert_eq!(o.status.code(), Some(3), "{strategy}: {}", stderr(&o));
        assert!(stderr(&o).contains("history has zero weight"));
    }
}

#[test]
fn invalid_inputs_exit_1() {
    let robot = robot();
    let t = robot.to_str().unwrap();
    for args in [
        vec!["bel", "--theory", t, "--query", "q <= 1"],
        vec!["bel", "--theory", t, "--history", "fwd(", "--query", "h <= 1"],
        vec!["bel", "--theory", t, "--history", "jump(1)", "--query", "h <= 1"],
        vec!["bel", "--theory", t, "--history", "sonar()", "--query", "h <= 1"],
        vec!["bel", "--no-such-flag"],
        vec!["frobnicate"],
    ] {
        let o = degbel(&args);
        assert_eq!(o.status.code(), Some(1), "{args:?}: {}", stderr(&o));
        assert!(o.stdout.is_empty(), "{args:?} wrote to stdout");
    }
}

#[test]
fn large_problems_fall_back_to_the_grid() {
    let o = degbel(&[
        "bel",
        "--theory",
        robot().to_str().unwrap(),
        "--history",
        "fwd(1); fwd(1); fwd(1); fwd(1)",
        "--query",
        "h <= 5",
        "--format",
        "json",
        "--cells",
        "256",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stderr(&o).contains("grid strategy"), "{}", stderr(&o));
    let v = json(&o);
    assert_eq!(v["dimension"].as_u64(), Some(5));
}

#[test]
fn prior_density_is_flat() {
    let o = degbel(&[
        "density",
        "--theory",
        robot().to_str().unwrap(),
        "--history",
        "",
        "--grid-lo",
        "2.5",
        "--grid-hi",
        "11.5",
        "--grid-n",
        "19",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("point,density"));
    let rows: Vec<(f64, f64)> = lines
        .map(|l| {
            let (p, d) = l.split_once(',').unwrap();
            (p.parse().unwrap(), d.parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 19);
    for (_, d) in rows {
        assert!((d - 0.1).abs() < 1e-12, "{d}");
    }
    assert!(!text.contains('\r'));
}

#[test]
fn density_integrates_to_one() {
    let o = degbel(&[
        "density",
        "--theory",
        robot().to_str().unwrap(),
        "--history",
        "fwd(2); sonar()=4",
        "--grid-lo",
        "-10",
        "--grid-hi",
        "20",
        "--grid-n",
        "2048",
        "--format",
        "json",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v = json(&o);
    let pts: Vec<f64> = v["points"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_f64().unwrap())
        .collect();
    let ds: Vec<f64> = v["densities"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_f64().unwrap())
        .collect();
    let integral: f64 = pts
        .windows(2)
        .zip(ds.windows(2))
        .map(|(p, d)| 0.5 * (p[1] - p[0]) * (d[0] + d[1]))
        .sum();
    assert!((integral - 1.0).abs() < 1e-4, "{integral}");
}

#[test]
fn oracle_compare_agrees_on_the_sensing_scenario() {
    let o = degbel(&[
        "oracle-compare",
        "--theory",
        robot().to_str().unwrap(),
        "--history",
        "sonar()=5",
        "--query",
        "h <= 5",
        "--format",
        "json",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v = json(&o);
    assert!(v["max_gap"].as_f64().unwrap() <= 5e-3);
    assert_eq!(v["pass"].as_bool(), Some(true));
}

#[test]
fn oracle_compare_fails_with_few_particles() {
    let o = degbel(&[
        "oracle-compare",
        "--theory",
        robot().to_str().unwrap(),
        "--history",
        "sonar()=5",
        "--query",
        "h <= 5",
        "--particles",
        "10",
        "--tol",
        "1e-6",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("exceeds tolerance"));
}
