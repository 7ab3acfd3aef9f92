use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use retail_sim::model::SHIPPED_ATV;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_retail-sim"));
    c.env_remove("RETAILSIM_CONFIG_DIR");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn shipped_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn atv_path() -> String {
    shipped_dir().join("dept_atv.toml").display().to_string()
}

#[test]
fn run_is_reproducible() {
    let args = [
        "run",
        "--config",
        &atv_path(),
        "--seed",
        "42",
        "--weeks",
        "1",
    ];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success(), "{}", stderr(&a));
    assert_eq!(stdout(&a), stdout(&b));
    assert!(stdout(&a).contains("transactions: "));
    assert!(stdout(&a).contains("cashier_utilization: 0."));
}

#[test]
fn generated_seed_is_printed_and_replays() {
    let a = run(&["run", "--department", "ww", "--weeks", "1"]);
    assert!(a.status.success());
    let out = stdout(&a);
    let seed = out
        .lines()
        .find_map(|l| l.strip_prefix("seed: "))
        .and_then(|l| l.split_whitespace().next())
        .expect("seed line")
        .to_string();
    let b = run(&["run", "--department", "ww", "--weeks", "1", "--seed", &seed]);
    let metrics = |s: &str| {
        s.lines()
            .filter(|l| !l.starts_with("seed"))
            .collect::<Vec<_>>()
            .join("\n")
    };
    assert_eq!(metrics(&out), metrics(&stdout(&b)));
}

#[test]
fn missing_config_exits_2() {
    let o = run(&["run", "--config", "missing.toml"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn zero_weeks_exits_2() {
    let o = run(&["run", "--config", &atv_path(), "--weeks", "0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(
        stderr(&o).contains("horizon must be ≥ 1 day"),
        "{}",
        stderr(&o)
    );
}

#[test]
fn missing_manager_exits_2() {
    let o = run(&[
        "run",
        "--config",
        &atv_path(),
        "--managers",
        "0",
        "--seed",
        "1",
        "--weeks",
        "1",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn run_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("one.csv");
    let o = run(&[
        "run",
        "--department",
        "atv",
        "--seed",
        "3",
        "--weeks",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(out).unwrap();
    assert_eq!(text.lines().count(), 2);
    assert!(text.starts_with("department,seed,transactions,"));
}

#[test]
fn empowerment_sweep_one_rep_is_ten_rows_and_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for (path, jobs) in [(&a, "1"), (&b, "3")] {
        let o = run(&[
            "sweep",
            "--experiment",
            "empowerment",
            "--reps",
            "1",
            "--base-seed",
            "9",
            "--weeks",
            "1",
            "--jobs",
            jobs,
            "--out",
            path.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        assert!(stdout(&o).contains("refund_satisfaction (mean / sd)"));
    }
    let text = std::fs::read(&a).unwrap();
    assert_eq!(text, std::fs::read(&b).unwrap());
    assert_eq!(String::from_utf8(text).unwrap().lines().count(), 11);
}

#[test]
fn sweep_reads_config_dir_from_env() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["dept_atv.toml", "dept_ww.toml"] {
        let text = std::fs::read_to_string(shipped_dir().join(name)).unwrap();
        let text = text.replace("days = 70", "days = 2");
        std::fs::write(dir.path().join(name), text).unwrap();
    }
    let out = dir.path().join("r.csv");
    let o = bin()
        .env("RETAILSIM_CONFIG_DIR", dir.path())
        .args([
            "sweep",
            "--experiment",
            "cashiers",
            "--reps",
            "1",
            "--base-seed",
            "1",
            "--out",
        ])
        .arg(&out)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    std::fs::remove_file(dir.path().join("dept_ww.toml")).unwrap();
    let o = bin()
        .env("RETAILSIM_CONFIG_DIR", dir.path())
        .args([
            "sweep",
            "--experiment",
            "cashiers",
            "--reps",
            "1",
            "--base-seed",
            "1",
            "--out",
        ])
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

const WORKED: &str = "experiment,department,level,replication,seed,y\n\
    x,A1,B1,0,0,1\nx,A1,B1,1,0,3\nx,A1,B2,0,0,2\nx,A1,B2,1,0,4\n\
    x,A2,B1,0,0,5\nx,A2,B1,1,0,7\nx,A2,B2,0,0,6\nx,A2,B2,1,0,8\n";

#[test]
fn analyze_worked_example() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("worked.csv");
    std::fs::write(&path, WORKED).unwrap();
    let o = run(&["analyze", path.to_str().unwrap(), "--metric", "y"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(
        stdout(&o).contains("department: F(1, 4) = 16.00, p = 0.0161"),
        "{}",
        stdout(&o)
    );
    let tests = std::fs::read_to_string(dir.path().join("worked.y.tests.csv")).unwrap();
    assert!(tests.starts_with("test,term,ss,df1,df2,ms,statistic,p"));
}

#[test]
fn analyze_constant_data_is_degenerate_not_fatal() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("flat.csv");
    let mut text = String::from("department,level,y\n");
    for d in ["A", "B"] {
        for l in ["1", "2", "3"] {
            text.push_str(&format!("{d},{l},5\n{d},{l},5\n"));
        }
    }
    std::fs::write(&path, text).unwrap();
    let o = run(&["analyze", path.to_str().unwrap(), "--metric", "y"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("undefined"));
}

#[test]
fn analyze_unknown_metric_lists_available() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("worked.csv");
    std::fs::write(&path, WORKED).unwrap();
    let o = run(&["analyze", path.to_str().unwrap(), "--metric", "profit"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("available: y"));
}

#[test]
fn validate_accepts_shipped_configs() {
    let o = run(&["validate"]);
    assert!(o.status.success(), "{}", stdout(&o));
    let dir = shipped_dir();
    let o = run(&[
        "validate",
        dir.join("dept_atv.toml").to_str().unwrap(),
        dir.join("dept_ww.toml").to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stdout(&o));
}

/// (description, text to find, replacement)
const MUTATIONS: [(&str, &str, &str); 22] = [
    (
        "negative arrival rate",
        "rate_per_hour = 40.0",
        "rate_per_hour = -5.0",
    ),
    (
        "probability above one",
        "need_help = 0.38",
        "need_help = 1.38",
    ),
    (
        "negative probability",
        "buy_after_browse = 0.37",
        "buy_after_browse = -0.1",
    ),
    (
        "probability of two",
        "buy_after_help = 0.56",
        "buy_after_help = 2.0",
    ),
    (
        "refund goal above one",
        "refund_goal = 0.1",
        "refund_goal = 1.5",
    ),
    (
        "mode below min",
        "[durations.browse]\nmin = 1.0",
        "[durations.browse]\nmin = 8.0",
    ),
    (
        "max below mode",
        "mode = 15.0\nmax = 30.0",
        "mode = 15.0\nmax = 10.0",
    ),
    ("zero days", "days = 70", "days = 0"),
    (
        "zero-length day",
        "trading_day_minutes = 600.0",
        "trading_day_minutes = 0.0",
    ),
    (
        "day longer than a day",
        "trading_day_minutes = 600.0",
        "trading_day_minutes = 2000.0",
    ),
    (
        "unknown key",
        "[arrivals]\n",
        "[arrivals]\ncolour = \"red\"\n",
    ),
    (
        "unknown section",
        "[staffing]",
        "[bogus]\nx = 1\n\n[staffing]",
    ),
    ("missing key", "rate_per_hour = 40.0", ""),
    (
        "empowerment above one",
        "p_empowered = 0.0",
        "p_empowered = 1.2",
    ),
    (
        "no manager for referrals",
        "section_managers = 1",
        "section_managers = 0",
    ),
    (
        "negative duration multiplier",
        "empowered_duration_multiplier = 2.0",
        "empowered_duration_multiplier = -1.0",
    ),
    ("negative headcount", "cashiers = 3", "cashiers = -1"),
    ("syntax error", "rate_per_hour = 40.0", "rate_per_hour = "),
    ("wrong type", "needs_expert = 0.2", "needs_expert = \"abc\""),
    (
        "unassisted share above non-help share",
        "buy_after_browse = 0.37",
        "buy_after_browse = 0.7",
    ),
    (
        "overhead max below min",
        "mode = 3.0\nmax = 6.0",
        "mode = 3.0\nmax = 0.5",
    ),
    (
        "duplicate cashier priority",
        "[horizon]",
        "[queueing]\ncashier_priority = [\"pay\", \"pay\"]\n\n[horizon]",
    ),
];

#[test]
fn validate_rejects_corrupted_configs() {
    let dir = tempfile::tempdir().unwrap();
    let mut paths = Vec::new();
    for (i, (what, find, replace)) in MUTATIONS.iter().enumerate() {
        assert!(
            SHIPPED_ATV.contains(find),
            "mutation {what:?} does not apply"
        );
        let path = dir.path().join(format!("mutant_{i:02}.toml"));
        std::fs::write(&path, SHIPPED_ATV.replacen(find, replace, 1)).unwrap();
        let o = run(&["validate", path.to_str().unwrap()]);
        assert_eq!(
            o.status.code(),
            Some(2),
            "mutation {what:?} accepted:\n{}",
            stdout(&o)
        );
        assert!(stdout(&o).contains("invalid"), "{what}");
        paths.push(path);
    }
    assert!(paths.len() >= 20);
}

#[test]
fn config_errors_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(
        &path,
        SHIPPED_ATV.replacen(
            "[durations.browse]\nmin = 1.0",
            "[durations.browse]\nmin = 8.0",
            1,
        ),
    )
    .unwrap();
    let o = run(&["run", "--config", path.to_str().unwrap(), "--seed", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("durations.browse"), "{}", stderr(&o));
}
