use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_hopwalk");

const SUBCOMMANDS: [&str; 7] =
    ["sample-env", "speed", "slowdown-quenched", "slowdown-annealed", "asymptotics", "tail-check", "validate"];

fn hopwalk(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

const ASYMPTOTICS: &str = r#"
seed = 1
[environment]
omega = { variant = "uniform", a = 0.6, b = 0.8 }
tail = { variant = "weibull", alpha = 1.0 }
[asymptotics]
t_grid = [100.0, 10000.0]
"#;

fn golden(name: &str) -> String {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn help_text_matches_golden_files() {
    let out = hopwalk(&["--help"]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap(), golden("help.txt"));
    for sub in SUBCOMMANDS {
        let out = hopwalk(&[sub, "--help"]);
        assert!(out.status.success(), "{sub}");
        let text = String::from_utf8(out.stdout).unwrap();
        assert_eq!(text, golden(&format!("help_{sub}.txt")), "{sub}");
        for flag in ["--config", "--seed", "--out", "--jobs", "--verbose"] {
            assert!(text.contains(flag), "{sub} help lacks {flag}");
        }
        if sub != "validate" {
            assert!(text.contains("--format") && text.contains("--t-grid"), "{sub}");
        }
    }
}

#[test]
fn unknown_flags_and_subcommands_exit_2() {
    assert_eq!(hopwalk(&["speed", "--bogus"]).status.code(), Some(2));
    assert_eq!(hopwalk(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn malformed_toml_exits_2_without_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.toml", "seed = \n[environment\n");
    let out_dir = dir.path().join("out");
    let out = hopwalk(&["slowdown-quenched", "--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out_dir.exists());
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "config");
    assert_eq!(err["exit_code"], 2);
}

#[test]
fn missing_config_file_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = hopwalk(&["speed", "--config", dir.path().join("nope.toml").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn domain_error_exits_3_without_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "a.toml", ASYMPTOTICS);
    let out_dir = dir.path().join("out");
    let out = hopwalk(&[
        "asymptotics",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "--t-grid",
        "0.5,10",
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(!out_dir.exists());
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "domain");
}

#[test]
fn asymptotics_emits_weibull_h() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "a.toml", ASYMPTOTICS);
    let out_dir = dir.path().join("out");
    let out = hopwalk(&["asymptotics", "--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(out_dir.join("rates.csv")).unwrap();
    let mut rows = csv.lines().filter(|l| !l.starts_with('#'));
    let header: Vec<&str> = rows.next().unwrap().split(',').collect();
    let (it, ih) = (header.iter().position(|c| *c == "t").unwrap(), header.iter().position(|c| *c == "h").unwrap());
    let row = rows.map(|r| r.split(',').map(str::to_string).collect::<Vec<_>>()).find(|r| r[it] == "10000").unwrap();
    let h: f64 = row[ih].parse().unwrap();
    assert!((h / 104.7112 - 1.0).abs() < 1e-6, "{h}");
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("run.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["subcommand"], "asymptotics");
}

#[test]
fn validate_fixture_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = hopwalk(&["validate", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("validation.json")).unwrap()).unwrap();
    assert!(report["checks"].as_array().unwrap().iter().all(|c| c["passed"] == true));
}

#[test]
fn validate_without_oracle_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "v.toml",
        r#"
seed = 1
[environment]
omega = { variant = "uniform", a = 0.6, b = 0.8 }
tail = { variant = "weibull", alpha = 1.0 }
[slowdown]
v_fraction = 0.5
t_grid = [20.0]
environments = 1
oracle = { enabled = false, tol = 1e-8, max_sites = 200 }
"#,
    );
    let out = hopwalk(&["validate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn output_is_independent_of_jobs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "q.toml",
        r#"
seed = 5
[environment]
omega = { variant = "uniform", a = 0.6, b = 0.8 }
tail = { variant = "pareto", alpha = 2.0 }
[slowdown]
v_fraction = 0.5
t_grid = [10.0, 20.0]
environments = 3
mc_replicas = 500
"#,
    );
    let run = |jobs: &str| {
        let out_dir = dir.path().join(format!("out{jobs}"));
        let out = hopwalk(&[
            "slowdown-quenched",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
            "--jobs",
            jobs,
        ]);
        assert!(out.status.success());
        (std::fs::read(out_dir.join("quenched.csv")).unwrap(), std::fs::read(out_dir.join("quenched.jsonl")).unwrap())
    };
    assert_eq!(run("1"), run("4"));
}

#[test]
fn format_selects_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "a.toml", ASYMPTOTICS);
    let out_dir = dir.path().join("out");
    let out = hopwalk(&[
        "asymptotics",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "--format",
        "jsonl",
    ]);
    assert!(out.status.success());
    assert!(out_dir.join("rates.jsonl").exists());
    assert!(!out_dir.join("rates.csv").exists());
}
