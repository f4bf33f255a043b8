use std::fs;
use std::process::{Command, Output};

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cycledger"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn run_writes_every_report_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# two rounds\nrounds = 2\nB = 16\n").unwrap();
    let mut dumps = Vec::new();
    for name in ["a", "b"] {
        let out_dir = dir.path().join(name);
        let o = cli(&[
            "run",
            "--seed",
            "13",
            "--config",
            cfg.to_str().unwrap(),
            "--set",
            "users_per_shard=8",
            "--out-dir",
            out_dir.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let chain = fs::read(out_dir.join("chain.txt")).unwrap();
        let metrics = fs::read_to_string(out_dir.join("metrics.csv")).unwrap();
        assert_eq!(metrics.lines().count(), 3);
        for f in ["messages.csv", "reputation.csv"] {
            assert!(fs::read_to_string(out_dir.join(f)).unwrap().starts_with("round,"));
        }
        dumps.push((chain, metrics));
    }
    assert_eq!(dumps[0], dumps[1]);
}

#[test]
fn run_prints_metrics_and_traces_on_request() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.txt");
    let o = cli(&[
        "run",
        "--seed",
        "2",
        "--set",
        "rounds=1",
        "--trace",
        trace.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with("round,block,submitted"));
    assert_eq!(text.lines().count(), 2);
    assert!(fs::read_to_string(trace).unwrap().lines().count() > 100);
}

#[test]
fn errors_exit_nonzero_with_a_diagnostic() {
    let o = cli(&["run", "--seed", "1", "--set", "rounds=0"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("rounds"));
    let o = cli(&["run", "--seed", "1", "--set", "nonsense"]);
    assert!(!o.status.success());
    let o = cli(&["run", "--set", "rounds=1"]);
    assert!(!o.status.success(), "seed is mandatory");
    let o = cli(&["prob", "tail", "--n", "5", "--t", "6", "--c", "2"]);
    assert!(!o.status.success());
    let o = cli(&[
        "mc", "--n", "60", "--t", "20", "--c", "10", "--trials", "0", "--seed", "1",
    ]);
    assert!(!o.status.success());
}

#[test]
fn prob_subcommands_report_exact_values() {
    let o = cli(&["prob", "tail", "--n", "6", "--t", "2", "--c", "3", "--exact"]);
    assert_eq!(stdout(&o), "tail,2.000000e-1\nexact,4/20\n");
    let o = cli(&["prob", "partial", "--lambda", "40"]);
    assert_eq!(stdout(&o), "partial,8.225263e-20,1/12157665459056928801\n");
    let o = cli(&["prob", "bound", "--c", "12"]);
    assert_eq!(stdout(&o), "bound,3.678794e-1\n");
    let o = cli(&["prob", "sweep"]);
    let text = stdout(&o);
    assert_eq!(text.lines().next(), Some("c,exact_tail,chernoff_bound"));
    assert_eq!(text.lines().count(), 11);
}

#[test]
fn mc_reports_estimate_next_to_exact() {
    let o = cli(&[
        "mc", "--n", "60", "--t", "20", "--c", "10", "--trials", "20000", "--seed", "4",
    ]);
    assert!(o.status.success());
    let text = stdout(&o);
    let row: Vec<f64> = text
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .map(|v| v.parse().unwrap())
        .collect();
    assert!((row[0] - row[1]).abs() <= 4.0 * row[2]);
}
