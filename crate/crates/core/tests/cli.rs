use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rank_lab::cli::read_results_csv;
use rank_lab::pgvar::{read_study_csv, read_sweep_csv};
use rank_lab::trainers::RunRecord;

const BASE: &str = r#"
seed = 5

[dataset]
source = "synthetic"
num_queries = 8
pool_size = 20
relevant_fraction = 0.1
feature_dim = 5
noise_sigma = 0.2
holdout_queries = 8

[pretrain]
learning_rate = 0.05
epochs = 3

[trainer]
name = "single-d"
learning_rate = 0.01
epochs_outer = 3
epochs_inner = 2
"#;

/// Keeps the temporary directory alive.
struct Run(#[allow(dead_code)] tempfile::TempDir);

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(format!("{name}.toml"));
    fs::write(&p, text).unwrap();
    p
}

fn rank_lab(args: &[&str], env_out: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_rank-lab"));
    cmd.args(args).env("RUST_LOG", "off").env_remove("RANK_LAB_OUT");
    if let Some(o) = env_out {
        cmd.env("RANK_LAB_OUT", o);
    }
    cmd.output().unwrap()
}

/// Run `command` on `text` in a fresh directory and return the run directory.
fn run_ok(command: &str, text: &str) -> (Run, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "exp", text);
    let out = dir.path().join("out");
    let o = rank_lab(&[command, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()], None);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let run_dir = out.join("exp");
    (Run(dir), run_dir)
}

fn run_err(command: &str, text: &str) -> (i32, String) {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "exp", text);
    let out = dir.path().join("out");
    let o = rank_lab(&[command, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()], None);
    (o.status.code().unwrap(), String::from_utf8_lossy(&o.stderr).into_owned())
}

fn csv_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    v.sort();
    v
}

#[test]
fn pretrain_writes_checkpoint_and_curve() {
    let (_run, dir) = run_ok("pretrain", BASE);
    assert!(dir.join("checkpoints/pretrained.ckpt").is_file());
    assert_eq!(fs::read_to_string(dir.join("config.copy")).unwrap(), BASE);
    let rec = RunRecord::read_csv(fs::File::open(dir.join("curves.csv")).unwrap()).unwrap();
    assert_eq!(rec.series("pretrain", "log_likelihood").len(), 4);
    let results = read_results_csv(fs::File::open(dir.join("results.csv")).unwrap()).unwrap();
    assert_eq!(results.len(), 3);
}

#[test]
fn missing_learning_rate_is_a_config_error() {
    let text = BASE.replace("learning_rate = 0.05\n", "");
    let (code, err) = run_err("pretrain", &text);
    assert_eq!(code, 1);
    assert!(err.contains("learning_rate"), "{err}");
}

#[test]
fn train_single_d_records_every_epoch() {
    let (_run, dir) = run_ok("train", BASE);
    let rec = RunRecord::read_csv(fs::File::open(dir.join("curves.csv")).unwrap()).unwrap();
    for metric in ["ndcg@5", "p@5", "p@1"] {
        let s = rec.series("single-d", metric);
        assert_eq!(s.iter().map(|r| r.0).collect::<Vec<_>>(), vec![0, 1, 2, 3]);
    }
    assert!(dir.join("checkpoints/single-d.ckpt").is_file());
    assert!(!dir.join("chosen").exists());
}

#[test]
fn train_dual_d_writes_both_models_and_the_choice() {
    let (_run, dir) = run_ok("train", &BASE.replace("\"single-d\"", "\"dual-d\""));
    assert!(dir.join("checkpoints/dual-d-a.ckpt").is_file());
    assert!(dir.join("checkpoints/dual-d-b.ckpt").is_file());
    let chosen = fs::read_to_string(dir.join("chosen")).unwrap();
    assert!(chosen == "dual-d-a\n" || chosen == "dual-d-b\n");
    let results = read_results_csv(fs::File::open(dir.join("results.csv")).unwrap()).unwrap();
    let pick = |m: &str| results.iter().find(|r| r.model == m && r.metric == "ndcg@5").unwrap().value;
    assert_eq!(pick("dual-d-chosen"), pick(chosen.trim()));
}

#[test]
fn unknown_trainer_is_rejected() {
    let (code, err) = run_err("train", &BASE.replace("\"single-d\"", "\"bogus\""));
    assert_eq!(code, 1);
    assert!(err.contains("bogus"), "{err}");
}

#[test]
fn compare_needs_two_trainers_and_flags_budget_overrides() {
    let one = format!("{BASE}\n[compare]\ntrainers = [\"single-d\"]\n");
    assert_eq!(run_err("compare", &one).0, 1);

    let text = format!(
        "{BASE}\n[compare]\ntrainers = [\"irgan-pointwise\", \"single-d\", \"dual-d\"]\nseeds = [1, 2]\nbudget = 4\ndual_epochs_outer = 2\n"
    );
    let (_run, dir) = run_ok("compare", &text);
    let results = read_results_csv(fs::File::open(dir.join("results.csv")).unwrap()).unwrap();
    let warn: Vec<_> = results.iter().filter(|r| r.model == "warning").collect();
    assert_eq!(warn.len(), 1);
    assert_eq!((warn[0].metric.as_str(), warn[0].value), ("budget_mismatch:dual-d", 8.0));
    let per_seed = fs::read_to_string(dir.join("per_seed.csv")).unwrap();
    assert_eq!(per_seed.lines().count(), 1 + 2 * 3 * 3);

    let matched = text.replace("dual_epochs_outer = 2\n", "");
    let (_run, dir) = run_ok("compare", &matched);
    let results = read_results_csv(fs::File::open(dir.join("results.csv")).unwrap()).unwrap();
    assert!(results.iter().all(|r| r.model != "warning"));
}

const VARIANCE: &str = r#"
seed = 3

[variance]
fractions = [0.002, 0.005, 0.015]
num_queries = 4
pool_size = 200
mc_samples = 2000
"#;

#[test]
fn variance_study_and_sweep() {
    let (_run, dir) = run_ok("variance", VARIANCE);
    let rows = read_study_csv(fs::File::open(dir.join("study.csv")).unwrap()).unwrap();
    assert_eq!(rows.iter().map(|r| r.fraction).collect::<Vec<_>>(), vec![0.002, 0.005, 0.015]);
    let (q_max, sweep) = read_sweep_csv(fs::File::open(dir.join("sweep.csv")).unwrap()).unwrap();
    assert_eq!(sweep.len(), 9);
    let above: Vec<_> = sweep.iter().filter(|r| r.b > q_max).collect();
    assert!(!above.is_empty());
    for w in above.windows(2) {
        assert!(w[1].bound_rhs > w[0].bound_rhs);
    }
    let bound = fs::read_to_string(dir.join("bound.csv")).unwrap();
    assert_eq!(bound.lines().count(), 4);
}

#[test]
fn reruns_are_byte_identical() {
    let compare = format!("{BASE}\n[compare]\ntrainers = [\"single-d\", \"dns\"]\nseeds = [1, 2]\n");
    for (command, text) in [
        ("pretrain", BASE.to_string()),
        ("train", BASE.replace("\"single-d\"", "\"irgan-pointwise\"")),
        ("train", BASE.replace("\"single-d\"", "\"dual-d\"")),
        ("compare", compare),
        ("variance", VARIANCE.to_string()),
    ] {
        let (_a, first) = run_ok(command, &text);
        let (_b, second) = run_ok(command, &text);
        let (fa, fb) = (csv_files(&first), csv_files(&second));
        assert!(!fa.is_empty());
        assert_eq!(fa, fb, "{command}");
    }
}

#[test]
fn seed_flag_overrides_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "exp", BASE);
    let run = |seed: &str, out: &str| {
        let out = dir.path().join(out);
        let o = rank_lab(
            &["train", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--seed", seed],
            None,
        );
        assert!(o.status.success());
        fs::read(out.join("exp/curves.csv")).unwrap()
    };
    assert_eq!(run("5", "a"), fs::read(dir.path().join("a/exp/curves.csv")).unwrap());
    assert_ne!(run("5", "b"), run("6", "c"));
}

#[test]
fn output_root_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "exp", &format!("name = \"named\"\n{BASE}"));
    let env_out = dir.path().join("env-out");
    let o = rank_lab(&["pretrain", "--config", cfg.to_str().unwrap()], Some(&env_out));
    assert!(o.status.success());
    assert!(env_out.join("named/curves.csv").is_file());
}

#[test]
fn exit_codes_distinguish_data_and_numeric_failures() {
    // an unknown table is a config error before any data is read
    assert_eq!(run_err("train", &format!("{BASE}\n[unused]\n")).0, 1);
    let letor = r#"
[dataset]
source = "letor"
path = "does-not-exist.txt"

[pretrain]
learning_rate = 0.01
"#;
    let (code, err) = run_err("pretrain", letor);
    assert_eq!(code, 2, "{err}");

    let exploding = BASE.replace("learning_rate = 0.01", "learning_rate = 1.7e308");
    let (code, err) = run_err("train", &exploding);
    assert_eq!(code, 3, "{err}");
}

#[test]
fn missing_config_file_fails_cleanly() {
    let o = rank_lab(&["train", "--config", "/nonexistent/rank-lab.toml"], None);
    assert_eq!(o.status.code(), Some(1));
    let o = rank_lab(&["frobnicate", "--config", "x.toml"], None);
    assert_eq!(o.status.code(), Some(1));
}
