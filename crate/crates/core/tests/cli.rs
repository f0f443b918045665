use std::path::Path;
use std::process::{Command, Output};

use epi_lab::cli::{
    self, ExperimentConfig, OutputFormat, RunOptions, EXIT_CONFIG, EXIT_OK, EXIT_VIOLATED,
};
use epi_lab::entropy::EntropyMethod;
use epi_lab::ineq::{CheckKind, CheckOutcome, InequalityReport, Inputs, Verdict};
use epi_lab::EpiError;
use serde_json::Value;

const EQUAL_POWER: &str = r#"
schema = 1
checks = ["epi_lieb", "reverse_epi", "deficit_sandwich", "proof_chain"]
pairs = [["g", "g"], ["g2", "g2"]]
lambdas = [0.2, 0.5, 0.8]
seed = 3

[distributions]
g = { family = "gaussian", variance = 1.0 }
g2 = { family = "gaussian", variance = 2.5 }
"#;

const DEFICIT_SWEEP: &str = r#"
schema = 1
checks = ["deficit_sandwich"]
pairs = [["lap", "lap"]]
lambdas = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]

[distributions]
lap = { family = "laplace", scale = 1.0 }
"#;

fn epi_lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_epi-lab"))
        .args(args)
        .env_remove("EPI_LAB_WORKERS")
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn equal_power_config_is_all_equality() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "eq.toml", EQUAL_POWER);
    let out = dir.path().join("eq.json");
    let o = epi_lab(&["run", "--config", &config, "--out", out.to_str().unwrap()]);
    assert_eq!(
        o.status.code(),
        Some(EXIT_OK),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let doc: Value = serde_json::from_slice(&std::fs::read(&out).unwrap()).unwrap();
    assert_eq!(doc["schema_version"], 1);
    assert_eq!(doc["config_echo"]["seed"], 3);
    let reports = doc["reports"].as_array().unwrap();
    assert_eq!(reports.len(), 4 * 2 * 3);
    assert!(reports.iter().all(|r| r["verdict"] == "equality"));
    assert_eq!(doc["summary"]["equality"], 24);
    assert_eq!(doc["summary"]["violated"], 0);
    let stderr = String::from_utf8_lossy(&o.stderr);
    assert!(
        stderr.contains("cells 24: holds 0, equality 24"),
        "{stderr}"
    );
}

#[test]
fn unknown_check_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(
        dir.path(),
        "bad.toml",
        &EQUAL_POWER.replace("\"proof_chain\"", "\"epi_magic\""),
    );
    let o = epi_lab(&["run", "--config", &config]);
    assert_eq!(o.status.code(), Some(EXIT_CONFIG));
    let stderr = String::from_utf8_lossy(&o.stderr);
    assert!(
        stderr.contains("epi_magic") && stderr.contains("line 3"),
        "{stderr}"
    );
    assert!(o.stdout.is_empty());
}

#[test]
fn bad_field_and_flags_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "l.toml", &EQUAL_POWER.replace("0.8]", "1.5]"));
    let o = epi_lab(&["run", "--config", &config]);
    assert_eq!(o.status.code(), Some(EXIT_CONFIG));
    assert!(String::from_utf8_lossy(&o.stderr).contains("lambdas[2]"));

    let config = write(dir.path(), "ok.toml", EQUAL_POWER);
    let o = epi_lab(&["run", "--config", &config, "--tol-scale", "0"]);
    assert_eq!(o.status.code(), Some(EXIT_CONFIG));
    let o = epi_lab(&["run", "--config", &config, "--format", "xml"]);
    assert_eq!(o.status.code(), Some(EXIT_CONFIG));
    let o = epi_lab(&["run", "--config", "/nonexistent/config.toml"]);
    assert_eq!(o.status.code(), Some(EXIT_CONFIG));
}

#[test]
fn csv_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "sweep.toml", DEFICIT_SWEEP);
    let run = |name: &str, workers: &str| {
        let out = dir.path().join(name);
        let o = epi_lab(&[
            "run",
            "--config",
            &config,
            "--format",
            "csv",
            "--out",
            out.to_str().unwrap(),
            "--workers",
            workers,
        ]);
        assert_eq!(o.status.code(), Some(EXIT_OK));
        std::fs::read(out).unwrap()
    };
    let a = run("a.csv", "1");
    let b = run("b.csv", "3");
    assert_eq!(a, b);

    let text = String::from_utf8(a).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("check,step,inputs,lhs,rhs,gap,err,tol,verdict")
    );
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let gaps: Vec<f64> = reader
        .records()
        .map(|r| r.unwrap())
        .filter(|r| &r[1] == "deficit_nonnegative")
        .map(|r| r[5].parse().unwrap())
        .collect();
    assert_eq!(gaps.len(), 9);
    // i.i.d. pair: the deficit rises to its maximum at λ = ½ and is symmetric in λ ↔ 1 − λ.
    for k in 0..4 {
        assert!(gaps[k] < gaps[k + 1]);
        assert!((gaps[k] - gaps[8 - k]).abs() < 1e-6);
    }
    // mpmath oracle: lieb_gap_laplace_half
    assert!((gaps[4] - 0.048_399_909_118_375_618).abs() < 2e-6);
}

#[test]
fn seed_flag_overrides_config() {
    let text = r#"
schema = 1
checks = ["transport_pushforward", "gaussian_matrix"]
targets = ["lap"]
gaussian_matrix = { dims = [2], draws = 2 }

[distributions]
lap = { family = "laplace", scale = 1.0 }
"#;
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "s.toml", text);
    let json = |seed: &str| {
        let o = epi_lab(&["run", "--config", &config, "--seed", seed]);
        assert_eq!(o.status.code(), Some(EXIT_OK));
        serde_json::from_slice::<Value>(&o.stdout).unwrap()
    };
    let (a, b, c) = (json("1"), json("1"), json("2"));
    assert_eq!(a, b);
    assert_ne!(a["reports"], c["reports"]);
    assert_eq!(c["config_echo"]["seed"], 2);
}

#[test]
fn empty_run_writes_header_only_csv() {
    let text = EQUAL_POWER.replace("pairs = [[\"g\", \"g\"], [\"g2\", \"g2\"]]", "pairs = []");
    let config = ExperimentConfig::from_toml(&text).unwrap();
    let run = cli::execute(&config, RunOptions::default()).unwrap();
    assert!(run.records.is_empty());
    let mut buf = Vec::new();
    run.write(&mut buf, OutputFormat::Csv).unwrap();
    assert_eq!(
        String::from_utf8(buf).unwrap(),
        "check,step,inputs,lhs,rhs,gap,err,tol,verdict\n"
    );
    assert_eq!(run.exit_code(), EXIT_OK);
}

fn fake(
    verdict_gap: f64,
) -> impl Fn(&cli::Cell, &epi_lab::ineq::CheckContext) -> epi_lab::Result<CheckOutcome> + Sync {
    move |cell, ctx| {
        if cell.check == CheckKind::ProofChain {
            return Err(EpiError::Solver("fake failure".into()));
        }
        Ok(InequalityReport::inequality(
            "fake",
            verdict_gap,
            0.0,
            verdict_gap,
            0.0,
            ctx.tol_for(EntropyMethod::Grid),
            Inputs::new(),
        )
        .into())
    }
}

#[test]
fn exit_status_follows_violations() {
    let config = ExperimentConfig::from_toml(EQUAL_POWER).unwrap();

    let run = cli::execute_with(&config, RunOptions::default(), fake(-1.0)).unwrap();
    assert_eq!(run.summary.violated, 18);
    assert_eq!(run.summary.errors, 6);
    assert_eq!(run.exit_code(), EXIT_VIOLATED);

    let run = cli::execute_with(&config, RunOptions::default(), fake(1.0)).unwrap();
    assert_eq!(run.summary.holds, 18);
    assert_eq!(run.exit_code(), EXIT_OK);
    let mut buf = Vec::new();
    run.write(&mut buf, OutputFormat::Json).unwrap();
    let doc: Value = serde_json::from_slice(&buf).unwrap();
    let errors: Vec<&Value> = doc["reports"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|r| r["status"] == "error")
        .collect();
    assert_eq!(errors.len(), 6);
    assert!(errors[0]["error"]
        .as_str()
        .unwrap()
        .contains("fake failure"));
    assert_eq!(errors[0]["check"], "proof_chain");
    assert!(errors[0]["inputs"]["lambda"].is_number());

    let run = cli::execute_with(&config, RunOptions::default(), fake(-1e-7)).unwrap();
    assert_eq!(run.summary.equality, 18);
    let scaled = RunOptions {
        tol_scale: 1e-3,
        ..RunOptions::default()
    };
    let run = cli::execute_with(&config, scaled, fake(-1e-7)).unwrap();
    assert!(run
        .records
        .iter()
        .filter_map(|r| r.verdict())
        .all(|v| v == Verdict::Violated));
}

#[test]
fn listing_and_describing_checks() {
    let o = epi_lab(&["list-checks"]);
    assert_eq!(o.status.code(), Some(EXIT_OK));
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().count(), CheckKind::ALL.len());
    assert!(text.lines().next().unwrap().starts_with("epi_shannon"));

    let o = epi_lab(&["describe-check", "proof_chain"]);
    assert_eq!(o.status.code(), Some(EXIT_OK));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(
        text.contains("statement:") && text.contains("contract:") && text.contains("telescoping")
    );

    let o = epi_lab(&["describe-check", "epi_magic"]);
    assert_eq!(o.status.code(), Some(EXIT_CONFIG));
}

#[test]
fn workers_fall_back_to_environment() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "eq.toml", EQUAL_POWER);
    let o = Command::new(env!("CARGO_BIN_EXE_epi-lab"))
        .args(["run", "--config", &config])
        .env("EPI_LAB_WORKERS", "0")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(EXIT_CONFIG));
    assert!(String::from_utf8_lossy(&o.stderr).contains("worker"));
    let o = Command::new(env!("CARGO_BIN_EXE_epi-lab"))
        .args(["run", "--config", &config])
        .env("EPI_LAB_WORKERS", "2")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(EXIT_OK));
}

#[test]
fn shipped_config_parses() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/configs/standard.toml");
    let config = ExperimentConfig::load(Path::new(path)).unwrap();
    assert_eq!(config.checks.len(), CheckKind::ALL.len());
    let cells = config.cells().unwrap();
    assert!(cells.len() >= 144 * 7);
}
