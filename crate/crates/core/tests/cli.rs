use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const BALL: &str = r#"{"shape":"ball","center":[0,0],"radius":1,"resolution":32}"#;
const INTERVAL: &str = r#"{"shape":"interval","a":-1,"b":1,"resolution":64}"#;

fn gelfand(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gelfand"))
        .args(args)
        .env_remove("GELFAND_THREADS")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn summary(o: &Output) -> Value {
    let text = String::from_utf8_lossy(&o.stdout);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 1, "one summary line expected, got {text:?}");
    serde_json::from_str(lines[0]).expect("summary is JSON")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn out_dir(dir: &Path) -> &str {
    dir.to_str().unwrap()
}

#[test]
fn lambda_max_on_ball() {
    let dir = tempfile::tempdir().unwrap();
    let o = gelfand(&["lambda-max", "--domain", BALL, "--out", out_dir(dir.path())]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let s = summary(&o);
    let l = s["lambda_max"].as_f64().unwrap();
    assert!((l - (-1f64).exp()).abs() < 0.05 * (-1f64).exp(), "{l}");
    assert!(s["bracket_width"].as_f64().unwrap() > 0.0);
}

#[test]
fn lambda_max_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("interval.json");
    std::fs::write(&path, INTERVAL).unwrap();
    let o = gelfand(&[
        "lambda-max",
        "--domain",
        path.to_str().unwrap(),
        "--out",
        out_dir(dir.path()),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let l = summary(&o)["lambda_max"].as_f64().unwrap();
    assert!((l - (-1f64).exp()).abs() < 0.02, "{l}");
}

#[test]
fn cone_curve_branches_meet_near_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = gelfand(&[
        "cone-curve",
        "--d-max",
        "1",
        "--lambdas",
        "0:0.3678:0.01",
        "--out",
        out_dir(dir.path()),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("cone_curve.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("lambda,sup_norm,branch"));
    let rows: Vec<(f64, f64, String)> = lines
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].parse().unwrap(), f[1].parse().unwrap(), f[2].to_string())
        })
        .collect();
    let last = |b: &str| rows.iter().rev().find(|r| r.2 == b).cloned().unwrap();
    let (ls, ss, _) = last("small");
    let (ll, sl, _) = last("large");
    assert!((ls - 0.36).abs() < 1e-9 && (ll - 0.36).abs() < 1e-9);
    assert!(ss < 1.0 && sl > 1.0);
    assert!(sl - ss < 0.5, "branches should close up: {ss} {sl}");
}

#[test]
fn solve_limit_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let o = gelfand(&[
        "solve-limit",
        "--lambda",
        "0.5",
        "--domain",
        BALL,
        "--out",
        out_dir(dir.path()),
    ]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    assert_eq!(summary(&o)["report"]["status"], "Diverged");

    let o = gelfand(&[
        "solve-limit",
        "--lambda",
        "0.2",
        "--max-outer",
        "1",
        "--domain",
        BALL,
        "--out",
        out_dir(dir.path()),
    ]);
    assert_eq!(code(&o), 4, "{}", stderr(&o));

    let o = gelfand(&[
        "solve-limit",
        "--lambda",
        "0.2",
        "--domain",
        BALL,
        "--out",
        out_dir(dir.path()),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
}

#[test]
fn no_solution_regime_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let o = gelfand(&[
        "cone-curve",
        "--lambda",
        "0.5",
        "--d-max",
        "1",
        "--out",
        out_dir(dir.path()),
    ]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    let o = gelfand(&[
        "classify",
        "--lambda",
        "0.1",
        "--sup-u",
        "1",
        "--lambda1",
        "1",
        "--out",
        out_dir(dir.path()),
    ]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    assert_eq!(summary(&o)["class"], "Forbidden");
}

#[test]
fn misspelled_keys_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let o = gelfand(&[
        "solve-limit",
        "--lambda",
        "0.2",
        "--domain",
        BALL,
        "--config",
        r#"{"outer_tol":1e-8,"u_capp":3}"#,
        "--out",
        out_dir(dir.path()),
    ]);
    assert_eq!(code(&o), 1);
    let err = stderr(&o);
    assert!(err.contains("u_capp") && err.contains("example"), "{err}");

    let o = gelfand(&[
        "domain",
        "--domain",
        r#"{"shape":"ball","centre":[0,0],"radius":1,"resolution":32}"#,
        "--out",
        out_dir(dir.path()),
    ]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("centre"));

    let o = gelfand(&["solve-limit", "--lambda", "0.2", "--out", out_dir(dir.path())]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("domain"));

    let o = gelfand(&["frobnicate"]);
    assert_eq!(code(&o), 1);
    let o = gelfand(&["--help"]);
    assert_eq!(code(&o), 0);
}

#[test]
fn bad_thread_count_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_gelfand"))
        .args([
            "solve-limit",
            "--lambda",
            "0.2",
            "--domain",
            INTERVAL,
            "--out",
            out_dir(dir.path()),
        ])
        .env("GELFAND_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("GELFAND_THREADS"));
}

#[test]
fn csv_rows_match_interior_plus_boundary() {
    let dir = tempfile::tempdir().unwrap();
    let o = gelfand(&["domain", "--domain", BALL, "--out", out_dir(dir.path())]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let s = summary(&o);
    let expected = s["interior"].as_u64().unwrap() + s["boundary"].as_u64().unwrap();

    let o = gelfand(&[
        "solve-limit",
        "--lambda",
        "0.2",
        "--domain",
        BALL,
        "--format",
        "csv,pgm,json",
        "--out",
        out_dir(dir.path()),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("solution.csv")).unwrap();
    assert_eq!(csv.lines().count() as u64, expected + 1);
    assert!(csv.starts_with("x,y,value\n"));
    for name in ["solution.pgm", "solution.pgm.json", "report.json"] {
        assert!(dir.path().join(name).exists(), "{name}");
    }
    let pgm = std::fs::read_to_string(dir.path().join("solution.pgm")).unwrap();
    assert!(pgm.starts_with("P2"));
}

#[test]
fn identical_runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let o = gelfand(&[
            "branch",
            "--domain",
            BALL,
            "--lambdas",
            "0.05:0.3:0.05",
            "--out",
            out_dir(d.path()),
        ]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        let o = gelfand(&[
            "solve-limit",
            "--lambda",
            "0.25",
            "--domain",
            BALL,
            "--out",
            out_dir(d.path()),
        ]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    for name in ["branch.csv", "solution.csv"] {
        let x = std::fs::read(a.path().join(name)).unwrap();
        let y = std::fs::read(b.path().join(name)).unwrap();
        assert_eq!(x, y, "{name} differs");
    }
    let branch = std::fs::read_to_string(a.path().join("branch.csv")).unwrap();
    assert!(branch.starts_with("lambda,sup_norm,status,outer_iters,residual_sup\n"));
    assert_eq!(branch.lines().count(), 7);
}

#[test]
fn verify_is_reproducible_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let run = || {
        gelfand(&[
            "verify",
            "--seed",
            "11",
            "--resolution",
            "16",
            "--out",
            out_dir(dir.path()),
        ])
    };
    let (x, y) = (run(), run());
    assert_eq!(code(&x), 0, "{}", String::from_utf8_lossy(&x.stdout));
    assert_eq!(x.stdout, y.stdout);
    assert_eq!(summary(&x)["failed"], 0);
}

#[test]
fn finite_p_subcommands() {
    let dir = tempfile::tempdir().unwrap();
    let o = gelfand(&[
        "torsion",
        "--p",
        "4",
        "--domain",
        INTERVAL,
        "--out",
        out_dir(dir.path()),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let sup = summary(&o)["sup"].as_f64().unwrap();
    assert!((sup - 0.75).abs() < 0.01, "{sup}");

    let o = gelfand(&[
        "solve-p",
        "--p",
        "3",
        "--lambda",
        "0.3",
        "--domain",
        INTERVAL,
        "--out",
        out_dir(dir.path()),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));

    let o = gelfand(&[
        "lambda-thresholds",
        "--p",
        "2",
        "--domain",
        INTERVAL,
        "--out",
        out_dir(dir.path()),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let s = summary(&o);
    let check = s["lambda_check"]["value"].as_f64().unwrap();
    let hat = s["lambda_hat"]["value"].as_f64().unwrap();
    assert!(check <= hat);

    let o = gelfand(&[
        "converge",
        "--lambda",
        "0.2",
        "--p-list",
        "10,20",
        "--domain",
        INTERVAL,
        "--out",
        out_dir(dir.path()),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("convergence.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
}
