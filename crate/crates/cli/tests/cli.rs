//! End-to-end CLI contract: subcommands, flag overrides, and exit codes.

use std::path::Path;
use std::process::Command;

fn qmpher() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qmpher"))
}

fn write_config(path: &Path, out_dir: &Path) {
    let config = serde_json::json!({
        "env": "reach_toy",
        "algorithm": "her",
        "n_epochs": 2,
        "episodes_per_epoch": 4,
        "opt_cycles": 2,
        "episodes_per_block": 2,
        "eval_episodes": 4,
        "hidden_layers": [8],
        "buffer_capacity": 50,
        "warmup_epochs": 0,
        "record_wall_time": false,
        "hyper": {"batch_size": 16},
        "out_dir": out_dir,
    });
    std::fs::write(path, serde_json::to_vec_pretty(&config).unwrap()).unwrap();
}

#[test]
fn train_eval_inspect_plot_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("run.json");
    let out_dir = dir.path().join("out");
    write_config(&config_path, &out_dir);

    let train = qmpher().args(["train", "--config"]).arg(&config_path).output().unwrap();
    assert!(train.status.success(), "{}", String::from_utf8_lossy(&train.stderr));
    let stdout = String::from_utf8_lossy(&train.stdout);
    assert!(stdout.contains("trained 2 epochs"));
    let metrics = out_dir.join("metrics.csv");
    let checkpoint = out_dir.join("checkpoint.json");
    assert!(metrics.exists() && checkpoint.exists());

    let eval = qmpher()
        .args(["eval", "--episodes", "4", "--checkpoint"])
        .arg(&checkpoint)
        .output()
        .unwrap();
    assert!(eval.status.success(), "{}", String::from_utf8_lossy(&eval.stderr));
    assert!(String::from_utf8_lossy(&eval.stdout).contains("success_rate="));

    let inspect = qmpher().args(["inspect", "--checkpoint"]).arg(&checkpoint).output().unwrap();
    assert!(inspect.status.success());
    let text = String::from_utf8_lossy(&inspect.stdout);
    assert!(text.contains("env: reach_toy"));
    assert!(text.contains("actor layers: [9, 8, 3]"));

    let svg_path = dir.path().join("curves.svg");
    let plot = qmpher()
        .arg("plot")
        .arg(&metrics)
        .arg("--out")
        .arg(&svg_path)
        .output()
        .unwrap();
    assert!(plot.status.success(), "{}", String::from_utf8_lossy(&plot.stderr));
    assert!(svg_path.exists());
    assert!(dir.path().join("curves.table.csv").exists());
}

#[test]
fn train_flags_override_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("run.json");
    write_config(&config_path, &dir.path().join("ignored"));
    let out = dir.path().join("overridden");
    let run = qmpher()
        .args(["train", "--seed", "5", "--config"])
        .arg(&config_path)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert!(out.join("metrics.csv").exists());
    assert!(!dir.path().join("ignored").exists());
}

#[test]
fn config_errors_exit_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("run.json");
    write_config(&config_path, &dir.path().join("out"));
    let run = qmpher()
        .args(["train", "--env", "not_an_env", "--config"])
        .arg(&config_path)
        .output()
        .unwrap();
    assert_eq!(run.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&run.stderr).contains("unknown environment"));

    let bad_algo = qmpher()
        .args(["train", "--algo", "sac", "--config"])
        .arg(&config_path)
        .output()
        .unwrap();
    assert_eq!(bad_algo.status.code(), Some(2));
}

#[test]
fn io_errors_exit_with_code_4() {
    let run = qmpher()
        .args(["eval", "--checkpoint", "/nonexistent/ckpt.json"])
        .output()
        .unwrap();
    assert_eq!(run.status.code(), Some(4));
}

#[test]
fn eval_rejects_a_mismatched_env() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("run.json");
    let out_dir = dir.path().join("out");
    write_config(&config_path, &out_dir);
    let train = qmpher().args(["train", "--config"]).arg(&config_path).output().unwrap();
    assert!(train.status.success());
    let run = qmpher()
        .args(["eval", "--env", "push_toy", "--checkpoint"])
        .arg(out_dir.join("checkpoint.json"))
        .output()
        .unwrap();
    assert_eq!(run.status.code(), Some(2));
}
