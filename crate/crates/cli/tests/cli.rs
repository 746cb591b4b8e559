use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use glue_polling_cli::config::{load_config, to_toml, RunDefaults};

const BIN: &str = env!("CARGO_BIN_EXE_gpoll");

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn gpoll(args: &[&str]) -> Output {
    Command::new(BIN).args(args).env_remove("GPOLL_SEED").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

/// Column `name` of a CSV text, as numbers where they parse.
fn column(csv: &str, name: &str) -> Vec<String> {
    let mut lines = csv.lines();
    let idx = lines.next().unwrap().split(',').position(|h| h == name).unwrap();
    lines.map(|l| l.split(',').nth(idx).unwrap().to_string()).collect()
}

const TABLE1_ROW1: &str = r#"
[[stations]]
lambda = 1.0
nu = 1.0
service = { kind = "exponential", mean = 0.45 }
switchover = { kind = "exponential", mean = 1.0 }
glue = { kind = "deterministic", value = 0.5 }

[[stations]]
lambda = 1.0
nu = 1.0
service = { kind = "exponential", mean = 0.45 }
switchover = { kind = "exponential", mean = 1.0 }
glue = { kind = "deterministic", value = 0.5 }
"#;

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn validate_reports_utilization() {
    let o = gpoll(&["validate", fixture("example1.toml").to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rho = column(&stdout(&o), "rho");
    assert_eq!(rho.len(), 6);
    assert!((rho[5].parse::<f64>().unwrap() - 0.775).abs() < 1e-12);

    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "t1.toml", TABLE1_ROW1);
    let cfg = load_config(&p).unwrap();
    assert_eq!(cfg.len(), 2);
    assert!((cfg.rho() - 0.9).abs() < 1e-12);
}

#[test]
fn bad_documents_exit_with_1() {
    let dir = tempfile::tempdir().unwrap();
    let missing = write(dir.path(), "a.toml", &TABLE1_ROW1.replacen("nu = 1.0\n", "", 1));
    let o = gpoll(&["approx", missing.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("station 0: missing field `nu`"), "{}", stderr(&o));

    let unknown = write(dir.path(), "b.toml", &TABLE1_ROW1.replacen("nu = 1.0", "nu = 1.0\nrate = 3.0", 1));
    let o = gpoll(&["approx", unknown.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("rate"), "{}", stderr(&o));

    let unstable = write(dir.path(), "c.toml", &TABLE1_ROW1.replace("0.45", "0.5"));
    assert_eq!(gpoll(&["approx", unstable.to_str().unwrap()]).status.code(), Some(1));

    // Deterministic glue has no exact analysis.
    let det = write(dir.path(), "d.toml", TABLE1_ROW1);
    assert_eq!(gpoll(&["exact", det.to_str().unwrap()]).status.code(), Some(1));

    assert_eq!(gpoll(&["approx"]).status.code(), Some(1));
    assert_eq!(gpoll(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(gpoll(&["--help"]).status.code(), Some(0));
}

#[test]
fn approx_and_pcl_agree() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "t1.toml", TABLE1_ROW1);
    let o = gpoll(&["approx", p.to_str().unwrap()]);
    assert!(o.status.success());
    let waits: Vec<f64> = column(&stdout(&o), "mean_wait").iter().map(|v| v.parse().unwrap()).collect();
    assert!(waits.iter().all(|w| (w - 71.61).abs() < 0.01));
    let o = gpoll(&["pcl", p.to_str().unwrap()]);
    let text = stdout(&o);
    let line = text.lines().find(|l| l.starts_with("weighted_wait")).unwrap();
    let rhs: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
    let weighted: f64 = waits.iter().map(|w| 0.45 * w).sum();
    assert!((rhs - weighted).abs() < 1e-9 * rhs);
}

#[test]
fn exact_orders() {
    let ex1 = fixture("example1.toml");
    let full = gpoll(&["exact", ex1.to_str().unwrap()]);
    assert!(full.status.success(), "{}", stderr(&full));
    let means = gpoll(&["exact", "-K", "2", ex1.to_str().unwrap()]);
    assert!(means.status.success());
    assert_eq!(column(&stdout(&full), "mean_wait"), column(&stdout(&means), "mean_wait"));
    assert!(stdout(&full).lines().next().unwrap().ends_with("cor_4"));
    assert_eq!(gpoll(&["exact", "-K", "5", ex1.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn simulation_is_deterministic_given_the_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "t1.toml", TABLE1_ROW1);
    let run = |out: &str, extra: &[&str], env: Option<&str>| {
        let mut c = Command::new(BIN);
        c.args(["simulate", cfg.to_str().unwrap(), "--cycles", "2000", "--warmup", "100", "-o"])
            .arg(dir.path().join(out))
            .args(extra)
            .env_remove("GPOLL_SEED");
        if let Some(s) = env {
            c.env("GPOLL_SEED", s);
        }
        let o = c.output().unwrap();
        assert!(o.status.success(), "{}", stderr(&o));
        std::fs::read(dir.path().join(out)).unwrap()
    };
    let a = run("a.csv", &["--seed", "5"], None);
    assert_eq!(a, run("b.csv", &["--seed", "5"], None));
    assert_eq!(a, run("c.csv", &[], Some("5")));
    assert_eq!(a, run("d.csv", &["--seed", "5"], Some("6")));
    assert_ne!(a, run("e.csv", &[], Some("6")));
    let text = String::from_utf8(a).unwrap();
    assert_eq!(column(&text, "station"), ["0", "1", "total"]);
}

#[test]
fn failed_runs_leave_no_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "t1.toml", TABLE1_ROW1);
    let out = dir.path().join("sim.csv");
    let o = gpoll(&[
        "simulate",
        cfg.to_str().unwrap(),
        "--cycles",
        "1000",
        "-o",
        out.to_str().unwrap(),
        "--batches-out",
        dir.path().join("missing/batches.csv").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!out.exists());

    // Batches that do not divide the cycles fail before anything is written.
    let o = gpoll(&["simulate", cfg.to_str().unwrap(), "--cycles", "1001", "-o", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!out.exists());
}

#[test]
fn batch_means_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "t1.toml", TABLE1_ROW1);
    let raw = dir.path().join("raw.csv");
    let o = gpoll(&[
        "simulate",
        cfg.to_str().unwrap(),
        "--cycles",
        "1000",
        "--batches",
        "5",
        "--batches-out",
        raw.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(raw).unwrap();
    assert_eq!(text.lines().count(), 1 + 5 * 2);
}

#[test]
fn optimize_with_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "t1.toml", TABLE1_ROW1);
    let o = gpoll(&["optimize", cfg.to_str().unwrap(), "--budget", "2", "--weights", "3,1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let g: Vec<f64> = column(&text, "g_star").iter().map(|v| v.parse().unwrap()).collect();
    assert!((g.iter().sum::<f64>() - 2.0).abs() < 1e-10);
    assert!(g[0] > g[1]);
    assert_eq!(column(&text, "weight"), ["3", "1"]);
    let o = gpoll(&["optimize", cfg.to_str().unwrap(), "--weights", "1,2,3"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn optimizer_tables_reproduce() {
    for t in ["table6", "table7", "table8"] {
        let o = gpoll(&["reproduce", t]);
        assert!(o.status.success(), "{t}: {}", stderr(&o));
        assert!(column(&stdout(&o), "pass").iter().all(|p| p == "true"));
    }
}

#[test]
fn known_misprints_fail_with_3_and_keep_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t5.csv");
    let o = gpoll(&["reproduce", "table5", "-o", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    let text = std::fs::read_to_string(&out).unwrap();
    let failed: Vec<String> = text.lines().filter(|l| l.ends_with("false")).map(String::from).collect();
    assert_eq!(failed.len(), 1);
    assert!(failed[0].starts_with("table5,1,objective"), "{}", failed[0]);

    let o = gpoll(&["reproduce", "table1"]);
    assert_eq!(o.status.code(), Some(3));
    let text = stdout(&o);
    let failed: Vec<&str> = text.lines().filter(|l| l.ends_with("false")).collect();
    assert_eq!(failed.len(), 1);
    assert!(failed[0].starts_with("table1,5,approx_wait,1"), "{}", failed[0]);
}

#[test]
fn reproduce_rejects_unknown_tables_and_mismatched_fixtures() {
    assert_eq!(gpoll(&["reproduce", "table3"]).status.code(), Some(1));
    let f = fixture("table6.toml");
    assert_eq!(
        gpoll(&["reproduce", "table7", "--fixture", f.to_str().unwrap()]).status.code(),
        Some(1)
    );
    assert!(gpoll(&["reproduce", "table6", "--fixture", f.to_str().unwrap()]).status.success());
}

#[test]
fn example1_sweep_check() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.csv");
    let o = gpoll(&["sweep", fixture("example1.toml").to_str().unwrap(), "--check", "-o", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 52);
    // A zero tail tolerance cannot be met.
    let o = gpoll(&[
        "sweep",
        fixture("example1.toml").to_str().unwrap(),
        "--check",
        "--tail-tolerance",
        "0",
    ]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn emitted_documents_reload() {
    let ex1 = load_config(&fixture("example1.toml")).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let run = RunDefaults {
        seed: Some(9),
        cycles: Some(1000),
        ..Default::default()
    };
    let p = write(dir.path(), "round.toml", &to_toml(&ex1, &run));
    assert_eq!(load_config(&p).unwrap(), ex1);
    let o = gpoll(&["simulate", p.to_str().unwrap(), "--batches", "5"]);
    assert!(o.status.success(), "{}", stderr(&o));
}
