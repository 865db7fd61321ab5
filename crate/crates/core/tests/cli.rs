//! End-to-end CLI behavior: exit codes, output shapes, and the documented
//! subcommand contracts, driven through the compiled binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use accel_select::domain::{MethodDescriptor, SelectionDecision};
use accel_select::harness::{Config, EvalReport};
use accel_select::predictor::{
    build_training_set, save_model, train_meta_learner, ModelKind, PredictorConfig,
};
use accel_select::simlab::{default_fleet, generate_history, GroundTruthParams, NoiseSpec, WorkloadSpec};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_accel-select"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

/// Writes a small trained model plus task/hardware JSON files into `dir`.
fn write_selection_fixtures(dir: &Path) -> (PathBuf, PathBuf, PathBuf, PathBuf) {
    let fleet = default_fleet();
    let workload = WorkloadSpec {
        n_tasks: 6,
        seed: 90,
        ..WorkloadSpec::default()
    };
    let (tasks, tensor) = generate_history(
        &fleet,
        &workload,
        &GroundTruthParams::default(),
        &NoiseSpec { sigma: 0.0, seed: 3 },
    )
    .unwrap();
    let training =
        build_training_set(&tensor, &tasks, &MethodDescriptor::all(), &fleet).unwrap();
    let predictor = train_meta_learner(
        &training,
        &PredictorConfig {
            model_kind: ModelKind::Knn,
            k: 1,
            ..PredictorConfig::default()
        },
    )
    .unwrap();

    let model = dir.join("model.json");
    save_model(&predictor, &model).unwrap();
    let task = dir.join("task.json");
    std::fs::write(&task, serde_json::to_string_pretty(&tasks[0]).unwrap()).unwrap();
    let hardware = dir.join("hw.json");
    std::fs::write(&hardware, serde_json::to_string_pretty(&fleet[1]).unwrap()).unwrap();
    let catalog = dir.join("catalog.json");
    std::fs::write(&catalog, serde_json::to_string_pretty(&fleet).unwrap()).unwrap();
    (model, task, hardware, catalog)
}

#[test]
fn params_prints_the_builtin_defaults() {
    let out = run(&["params", "--print-defaults"]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let printed: Config = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(printed, Config::default());
}

#[test]
fn help_and_usage_errors_have_the_documented_exit_codes() {
    assert_eq!(code(&run(&["--help"])), 0);
    assert_eq!(code(&run(&["select", "--help"])), 0);
    // Usage mistakes are configuration errors, not I/O errors.
    assert_eq!(code(&run(&["frobnicate"])), 1);
    assert_eq!(code(&run(&["gen", "--no-such-flag"])), 1);
}

#[test]
fn select_returns_a_decision_or_the_documented_failure_codes() {
    let dir = tempfile::tempdir().unwrap();
    let (model, task, hardware, catalog) = write_selection_fixtures(dir.path());
    let (model, task) = (model.to_str().unwrap(), task.to_str().unwrap());
    let hardware = hardware.to_str().unwrap();
    let catalog = catalog.to_str().unwrap();

    // Generous budget: a decision prints on stdout.
    let out = run(&["select", "--model", model, "--task", task, "--hardware", hardware,
        "--budget", "1e9"]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let decision: SelectionDecision = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(decision.feasible_count, 5);
    assert!(decision.estimated_cost <= 1e9);

    // Joint selection searches the whole catalog.
    let out = run(&["select", "--model", model, "--task", task, "--joint", catalog,
        "--budget", "1e9"]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let joint: SelectionDecision = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(joint.feasible_count, 20);
    let fleet = default_fleet();
    assert!(fleet.iter().any(|hw| hw.hw_id == joint.hw_id));

    // Budget zero: nothing is affordable; the diagnostic names the cheapest
    // candidate's cost so the caller can raise the budget meaningfully.
    let out = run(&["select", "--model", model, "--task", task, "--hardware", hardware,
        "--budget", "0"]);
    assert_eq!(code(&out), 3);
    let msg = stderr(&out);
    assert!(msg.contains("no feasible method"), "stderr: {msg}");
    assert!(msg.contains("minimum estimated cost"), "stderr: {msg}");

    // A budget that is not a number is a configuration error.
    let out = run(&["select", "--model", model, "--task", task, "--hardware", hardware,
        "--budget", "NaN"]);
    assert_eq!(code(&out), 1);

    // Exactly one hardware scope must be given.
    let out = run(&["select", "--model", model, "--task", task, "--budget", "1"]);
    assert_eq!(code(&out), 1);
    let out = run(&["select", "--model", model, "--task", task, "--hardware", hardware,
        "--joint", catalog, "--budget", "1"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn config_and_io_failures_map_to_distinct_exit_codes() {
    let dir = tempfile::tempdir().unwrap();

    // Missing file: I/O error.
    let missing = dir.path().join("nope.json");
    let out = run(&["gen", "--config", missing.to_str().unwrap(), "--out",
        dir.path().join("h.jsonl").to_str().unwrap()]);
    assert_eq!(code(&out), 2, "stderr: {}", stderr(&out));

    // Unparseable config: parse error.
    let broken = dir.path().join("broken.json");
    std::fs::write(&broken, "{ not json").unwrap();
    let out = run(&["gen", "--config", broken.to_str().unwrap(), "--out",
        dir.path().join("h.jsonl").to_str().unwrap()]);
    assert_eq!(code(&out), 2, "stderr: {}", stderr(&out));

    // Well-formed but semantically invalid config: configuration error.
    let invalid = dir.path().join("invalid.json");
    std::fs::write(&invalid, r#"{"workload": {"n_tasks": 0}}"#).unwrap();
    let out = run(&["gen", "--config", invalid.to_str().unwrap(), "--out",
        dir.path().join("h.jsonl").to_str().unwrap()]);
    assert_eq!(code(&out), 1, "stderr: {}", stderr(&out));
}

#[test]
fn gen_train_eval_pipeline_produces_the_documented_files() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = Config::default();
    config.workload.n_tasks = 20;
    config.workload.seed = 55;
    config.eval.heldout_tasks = 10;
    config.predictor.rounds = 25;
    let config_path = dir.path().join("config.json");
    std::fs::write(&config_path, config.to_json().unwrap()).unwrap();
    let config_arg = config_path.to_str().unwrap();

    let history = dir.path().join("history.jsonl");
    let out = run(&["gen", "--config", config_arg, "--out", history.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let first_line = std::fs::read_to_string(&history)
        .unwrap()
        .lines()
        .next()
        .unwrap()
        .to_string();
    assert!(first_line.contains("accel-history-v1"), "header: {first_line}");

    let model = dir.path().join("model.json");
    let out = run(&["train", "--history", history.to_str().unwrap(), "--config", config_arg,
        "--out", model.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    assert!(std::fs::read_to_string(&model).unwrap().contains("accel-model-v1"));

    let report_dir = dir.path().join("report");
    let out = run(&["eval", "--config", config_arg, "--out", report_dir.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    assert!(stdout(&out).contains("report written to"));

    let summary: EvalReport =
        serde_json::from_str(&std::fs::read_to_string(report_dir.join("summary.json")).unwrap())
            .unwrap();
    let oracle = summary
        .aggregates
        .iter()
        .find(|a| a.policy == "oracle")
        .unwrap();
    assert_eq!(oracle.mean_regret, 0.0);
    assert_eq!(oracle.top1_accuracy, 1.0);

    // Every oracle row in the tabular output shows zero regret and no
    // budget violation.
    let rows = std::fs::read_to_string(report_dir.join("rows.csv")).unwrap();
    let mut oracle_rows = 0;
    for line in rows.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields.len(), 10, "row: {line}");
        if fields[1] == "oracle" {
            assert_eq!(fields[6].parse::<f64>().unwrap(), 0.0, "row: {line}");
            oracle_rows += 1;
        }
        assert_eq!(fields[9], "false", "row: {line}");
    }
    assert_eq!(oracle_rows, 10);
}
