use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = r#"
eval_slots = 100

[transmitter]
train_slots = 200

[jammer]
train_slots = 200

[training]
epochs = 20

[tuning]
hidden_layers = [1]
widths = [20]
activations = ["tanh"]
"#;

fn jamsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_jamsim"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn small_config(dir: &Path) -> String {
    let path = dir.join("small.toml");
    std::fs::write(&path, SMALL).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn run_writes_log_and_metrics_that_export_reproduces() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = dir.path().join("run");
    let o = jamsim(&["run", "--config", &cfg, "--jammer", "random", "--p-jam", "0.5", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["slot_log.csv", "metrics_transmitter.json", "metrics_jammer.json", "training_summary.json"] {
        assert!(out.join(f).exists(), "missing {f}");
    }

    let o = jamsim(&["export", "--log", out.join("slot_log.csv").to_str().unwrap(), "--subject", "jammer"]);
    assert!(o.status.success());
    let saved = std::fs::read(out.join("metrics_jammer.json")).unwrap();
    assert_eq!(o.stdout, saved);
}

#[test]
fn same_seed_gives_identical_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let a = jamsim(&["run", "--config", &cfg, "--jammer", "sensing", "--seed", "9"]);
    let b = jamsim(&["run", "--config", &cfg, "--jammer", "sensing", "--seed", "9"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn sweep_emits_a_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let table = dir.path().join("tau.csv");
    let o = jamsim(&[
        "sweep", "--config", &cfg, "--axis", "tau", "--values", "2,5", "--replications", "2", "--out",
        table.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&table).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 5);
    assert!(lines[0].starts_with("axis,point,value,seed,throughput"));
    assert!(lines[1].starts_with("tau,0,2,1,"));
}

#[test]
fn configuration_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "seed = \"one\"\n").unwrap();
    let cases: Vec<Vec<&str>> = vec![
        vec!["run", "--config", &cfg, "--p-d", "1.5"],
        vec!["run", "--config", &cfg, "--jammer", "laser"],
        vec!["run", "--config", bad.to_str().unwrap()],
        vec!["run", "--config", "/nonexistent/scenario.toml"],
        vec!["sweep", "--config", &cfg, "--axis", "mobility-circle-R", "--values", "2"],
        vec!["sweep", "--config", &cfg, "--axis", "tau", "--values", "x"],
    ];
    for args in cases {
        let o = jamsim(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn runtime_errors_exit_with_1() {
    let o = jamsim(&["export", "--log", "/nonexistent/slot_log.csv"]);
    assert_eq!(o.status.code(), Some(1));
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("log.csv");
    std::fs::write(&log, "not,a,slot,log\n").unwrap();
    let o = jamsim(&["export", "--log", log.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}
