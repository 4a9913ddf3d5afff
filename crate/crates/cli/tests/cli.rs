use std::path::Path;
use std::process::{Command, Output};

const CONFIG: &str = r#"
seed = 9
[data]
n_samples = 120
[model]
architecture = "QTSA"
n_qubits = 1
n_layers = 1
[train]
max_epochs = 3
batch_size = 16
[region]
resolution = 6
thresholds = [0.5, 0.9]
[compare]
circuits = [
  { architecture = "QTSA", n_qubits = 1, n_layers = 1 },
  { architecture = "IQP", n_qubits = 2, n_layers = 1 },
]
[noise]
p_dep = [0.0, 1.0]
t1_s = [1e-6]
"#;

fn qtsa(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qtsa")).args(args).current_dir(dir).output().unwrap()
}

fn setup() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.toml"), CONFIG).unwrap();
    dir
}

fn run(cmd: &str, dir: &Path, extra: &[&str]) -> Output {
    let mut args = vec![cmd, "--config", "run.toml", "--out", "out"];
    args.extend_from_slice(extra);
    let out = qtsa(&args, dir);
    assert!(out.status.success(), "{cmd}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join("out").join(name)).unwrap()
}

#[test]
fn pipeline_writes_documented_files() {
    let tmp = setup();
    let dir = tmp.path();
    for cmd in ["gen-data", "train", "eval", "scan-region", "compare-circuits", "noise-sweep"] {
        run(cmd, dir, &[]);
    }
    let data = read(dir, "dataset.csv");
    assert!(data.starts_with("f0,f1,label\n"));
    assert_eq!(data.lines().count(), 121);

    let model: serde_json::Value = serde_json::from_str(&read(dir, "model.json")).unwrap();
    for key in ["architecture", "n_qubits", "n_layers", "feature_dim", "activation", "param_layout", "params", "scaler", "history"] {
        assert!(model.get(key).is_some(), "model.json lacks {key}");
    }
    let history = read(dir, "history.csv");
    assert!(history.starts_with("epoch,loss,train_accuracy\n1,"));
    assert_eq!(history.lines().count(), 4);

    let metrics: serde_json::Value = serde_json::from_str(&read(dir, "metrics.json")).unwrap();
    let mut keys: Vec<&str> = metrics.as_object().unwrap().keys().map(String::as_str).collect();
    keys.sort_unstable();
    assert_eq!(keys, ["accuracy", "f1", "fn", "fp", "precision", "recall", "tn", "tp", "tr_sigma"]);
    let total: u64 = ["tp", "tn", "fp", "fn"].iter().map(|k| metrics[k].as_u64().unwrap()).sum();
    assert_eq!(total, 30);

    let region = read(dir, "region.csv");
    assert!(region.starts_with("delta,omega,p1,label@0.5,label@0.9,oracle_label\n"));
    assert_eq!(region.lines().count(), 37);
    assert!(region.lines().skip(1).all(|l| !l.ends_with(',')));

    let compare = read(dir, "compare.csv");
    assert!(compare.starts_with("architecture,n_qubits,n_layers,n_params,accuracy,f1,tr_sigma,error\nQTSA,1,1,"));
    assert_eq!(compare.lines().count(), 3);

    let sweep = read(dir, "sweep.csv");
    assert!(sweep.starts_with("setting_id,p_dep,t1_s,sample_id,success_prob,predicted_label,true_label\n"));
    assert_eq!(sweep.lines().count(), 1 + 3 * 30);
    assert_eq!(read(dir, "sweep_summary.csv").lines().count(), 4);
}

#[test]
fn seed_flag_overrides_config() {
    let tmp = setup();
    let dir = tmp.path();
    run("gen-data", dir, &[]);
    let a = read(dir, "dataset.csv");
    run("gen-data", dir, &["--seed", "9"]);
    assert_eq!(a, read(dir, "dataset.csv"));
    run("gen-data", dir, &["--seed", "10"]);
    assert_ne!(a, read(dir, "dataset.csv"));
}

#[test]
fn train_accepts_external_dataset() {
    let tmp = setup();
    let dir = tmp.path();
    run("gen-data", dir, &[]);
    std::fs::rename(dir.join("out/dataset.csv"), dir.join("data.csv")).unwrap();
    run("train", dir, &["--data", "data.csv"]);
    run("eval", dir, &["--data", "data.csv", "--model", "out/model.json"]);
    assert!(read(dir, "metrics.json").contains("tr_sigma"));
}

#[test]
fn usage_errors_exit_one() {
    let tmp = setup();
    for args in [&["bogus"][..], &["train", "--nope"], &["eval", "--seed", "x"], &[]] {
        assert_eq!(qtsa(args, tmp.path()).status.code(), Some(1), "{args:?}");
    }
    assert_eq!(qtsa(&["--help"], tmp.path()).status.code(), Some(0));
}

#[test]
fn runtime_failures_exit_two() {
    let tmp = setup();
    let dir = tmp.path();
    assert_eq!(qtsa(&["eval", "--model", "missing.json", "--out", "out"], dir).status.code(), Some(2));
    std::fs::write(dir.join("bad.toml"), "[train]\nlearning_rate = -1.0\n").unwrap();
    assert_eq!(qtsa(&["gen-data", "--config", "bad.toml", "--out", "out"], dir).status.code(), Some(2));
    std::fs::write(dir.join("typo.toml"), "[data]\nsamples = 3\n").unwrap();
    let out = qtsa(&["gen-data", "--config", "typo.toml", "--out", "out"], dir);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("samples"));
}
