use std::path::Path;
use std::process::{Command, Output};

const TINY: [&str; 12] = [
    "--set",
    "epochs=6",
    "--set",
    "train_size=200",
    "--set",
    "test_size=40",
    "--set",
    "hidden=16,16",
    "--set",
    "warmup_fraction=0.2",
    "--set",
    "queue_capacity=100",
];

fn tal(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tal")).args(args).output().expect("tal runs")
}

fn ok(args: &[&str]) {
    let out = tal(args);
    assert!(out.status.success(), "tal {args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
}

fn with_tiny<'a>(args: &[&'a str]) -> Vec<&'a str> {
    args.iter().copied().chain(TINY).collect()
}

fn read(path: impl AsRef<Path>) -> String {
    std::fs::read_to_string(path.as_ref()).unwrap_or_else(|e| panic!("{}: {e}", path.as_ref().display()))
}

fn report_value(report: &str, key: &str) -> String {
    report
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{key} = ")))
        .unwrap_or_else(|| panic!("missing {key}"))
        .to_string()
}

#[test]
fn gen_creates_missing_directories_and_resolved_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("a/b/c");
    let out_s = out.to_str().unwrap();
    ok(&with_tiny(&["gen", "--seed", "7", "--out", out_s]));
    assert!(out.join("train.csv").is_file());
    assert!(out.join("test.csv").is_file());
    let resolved = read(out.join("gen.resolved.cfg"));
    assert!(resolved.contains("seed = 7"));

    // The resolved config alone reproduces the data.
    let again = dir.path().join("again");
    let cfg = out.join("gen.resolved.cfg");
    ok(&["gen", "--config", cfg.to_str().unwrap(), "--out", again.to_str().unwrap()]);
    assert_eq!(read(out.join("test.csv")), read(again.join("test.csv")));
}

#[test]
fn unknown_config_key_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "seed = 1\nlearning_rat = 0.1\n").unwrap();
    let out = tal(&["gen", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("learning_rat"));
    assert!(!dir.path().join("train.csv").exists());
}

#[test]
fn loss_mode_changes_the_checkpoint_and_log_columns() {
    let dir = tempfile::tempdir().unwrap();
    let base = dir.path().join("data");
    let base_s = base.to_str().unwrap();
    ok(&with_tiny(&["gen", "--out", base_s]));
    let train_csv = format!("train_csv={}", base.join("train.csv").display());
    let mut checkpoints = Vec::new();
    for mode in ["ce", "tal"] {
        let out = dir.path().join(mode);
        ok(&with_tiny(&["train", "--loss-mode", mode, "--out", out.to_str().unwrap(), "--set", &train_csv]));
        let header = read(out.join("epochs.csv")).lines().next().unwrap().to_string();
        let expected = if mode == "tal" {
            "epoch,lr,train_loss,train_acc,queue_len,mean_tau"
        } else {
            "epoch,lr,train_loss,train_acc,queue_len"
        };
        assert_eq!(header, expected);
        assert_eq!(read(out.join("epochs.csv")).lines().count(), 7);
        checkpoints.push(std::fs::read(out.join("checkpoint.bin")).unwrap());
    }
    assert_ne!(checkpoints[0], checkpoints[1]);
}

#[test]
fn resumed_training_matches_uninterrupted() {
    let dir = tempfile::tempdir().unwrap();
    let full = dir.path().join("full");
    let split = dir.path().join("split");
    for out in [&full, &split] {
        ok(&with_tiny(&["gen", "--seed", "4", "--out", out.to_str().unwrap()]));
    }
    ok(&with_tiny(&["train", "--seed", "4", "--out", full.to_str().unwrap()]));
    ok(&with_tiny(&["train", "--seed", "4", "--out", split.to_str().unwrap(), "--stop-after", "3"]));
    assert_eq!(read(split.join("epochs.csv")).lines().count(), 4);
    ok(&with_tiny(&["train", "--seed", "4", "--out", split.to_str().unwrap(), "--resume"]));
    assert_eq!(
        std::fs::read(full.join("checkpoint.bin")).unwrap(),
        std::fs::read(split.join("checkpoint.bin")).unwrap()
    );
    assert_eq!(read(full.join("epochs.csv")), read(split.join("epochs.csv")));
}

#[test]
fn eval_writes_complete_report_and_curves() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    for cmd in ["gen", "train", "eval"] {
        ok(&with_tiny(&[cmd, "--out", out]));
    }
    let report = read(dir.path().join("report.txt"));
    assert_eq!(report.lines().count(), 3 * 5 * 7 + 1);
    let acc: f64 = report_value(&report, "id_accuracy").parse().unwrap();
    assert!((0.0..=1.0).contains(&acc));

    let scores = read(dir.path().join("scores.csv"));
    assert_eq!(scores.lines().next().unwrap(), "id,label,pred,correct,domain,msp,maxlogit,cosine,energy,entropy");
    assert_eq!(scores.lines().count(), 3 * 40 + 1);

    let curves = dir.path().join("curves");
    assert_eq!(std::fs::read_dir(&curves).unwrap().count(), 15);
    assert_eq!(read(curves.join("new_fd.cosine.csv")).lines().count(), 3 * 40 + 1);
    assert_eq!(read(curves.join("ood_d.msp.csv")).lines().count(), 2 * 40 + 1);
}

#[test]
fn eval_respects_the_settings_flag() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    for cmd in ["gen", "train"] {
        ok(&with_tiny(&[cmd, "--out", out]));
    }
    ok(&with_tiny(&["eval", "--out", out, "--settings", "new_fd"]));
    let report = read(dir.path().join("report.txt"));
    assert_eq!(report.lines().count(), 5 * 7 + 1);
    assert!(report.lines().all(|l| l.starts_with("new_fd.") || l.starts_with("id_accuracy")));
}

#[test]
fn perfect_classifier_has_zero_old_fd_aurc() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let easy = [
        "--set",
        "separation=8",
        "--set",
        "spread=0.2",
        "--set",
        "epochs=40",
        "--set",
        "atypical_fraction=0",
        "--loss-mode",
        "ce",
    ];
    for cmd in ["gen", "train", "eval"] {
        let mut args = with_tiny(&[cmd, "--out", out]);
        args.extend(easy);
        ok(&args);
    }
    let report = read(dir.path().join("report.txt"));
    assert_eq!(report_value(&report, "id_accuracy"), "1");
    for score in ["msp", "maxlogit", "cosine", "energy", "entropy"] {
        assert_eq!(report_value(&report, &format!("old_fd.{score}.aurc")), "0");
        // One-class set: ranking metrics are undefined.
        assert_eq!(report_value(&report, &format!("old_fd.{score}.auroc")), "nan");
    }
}

#[test]
fn sweep_grid_cardinality() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let mut args = vec!["sweep", "--out", out, "--set", "epochs=3", "--set", "warmup_fraction=0.34"];
    args.extend([
        "--set",
        "train_size=80",
        "--set",
        "test_size=20",
        "--set",
        "hidden=8,8",
        "--set",
        "sweep_t_min=1,5,10",
        "--set",
        "sweep_t_max=20,50,100",
        "--set",
        "sweep_seeds=0,1",
    ]);
    let status = Command::new(env!("CARGO_BIN_EXE_tal")).args(&args).env("TAL_NUM_PARALLEL", "2").output().unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let csv = read(dir.path().join("sweep.csv"));
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.iter().filter(|r| r.starts_with("data,")).count(), 18);
    assert_eq!(rows.iter().filter(|r| r.starts_with("aggregate,")).count(), 9);
    let width = csv.lines().next().unwrap().split(',').count();
    assert!(rows.iter().all(|r| r.split(',').count() == width));
}

#[test]
fn failing_sweep_cell_does_not_stop_the_others() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let mut args = with_tiny(&["sweep", "--out", out]);
    args.extend(["--set", "sweep_t_min=10,200", "--set", "sweep_t_max=100"]);
    let result = tal(&args);
    assert!(!result.status.success());
    assert!(String::from_utf8_lossy(&result.stderr).contains("cell 1"));
    let csv = read(dir.path().join("sweep.csv"));
    let status: Vec<&str> = csv.lines().skip(1).map(|r| r.split(',').nth(6).unwrap()).collect();
    assert_eq!(status, ["ok", "ok", "failed", "failed"]);
}

#[test]
fn single_cell_sweep_matches_train_and_eval() {
    let dir = tempfile::tempdir().unwrap();
    let sweep_out = dir.path().join("sweep");
    let mut args = with_tiny(&["sweep", "--seed", "5", "--out", sweep_out.to_str().unwrap()]);
    args.extend(["--set", "sweep_seeds=5"]);
    ok(&args);
    let direct = dir.path().join("direct");
    for cmd in ["gen", "train", "eval"] {
        ok(&with_tiny(&[cmd, "--seed", "5", "--out", direct.to_str().unwrap()]));
    }
    let run = sweep_out.join("cell-000/seed-5");
    for file in ["report.txt", "scores.csv", "epochs.csv"] {
        assert_eq!(read(run.join(file)), read(direct.join(file)), "{file}");
    }
}

#[test]
fn invalid_parallelism_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_tal"))
        .args(with_tiny(&["sweep", "--out", dir.path().to_str().unwrap()]))
        .env("TAL_NUM_PARALLEL", "0")
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("TAL_NUM_PARALLEL"));
}
