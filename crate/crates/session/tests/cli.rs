use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_neuroswarm"))
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn ok(out: Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn example_configs_parse() {
    for name in ["closed_loop.toml", "blocks.toml"] {
        neuroswarm_session::SessionConfig::load(configs().join(name)).unwrap();
    }
}

#[test]
fn run_analyze_and_replay() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("blocks.jsonl");
    let rec = dir.path().join("blocks.csv");

    // record the signal alongside the log by adding the path to a copy of the config
    let mut text = std::fs::read_to_string(configs().join("blocks.toml")).unwrap();
    text = format!("signal_record_path = {:?}\n{text}", rec.to_str().unwrap());
    let cfg = dir.path().join("blocks.toml");
    std::fs::write(&cfg, text).unwrap();

    let metrics = ok(bin().args(["run", "--headless", "--config"]).arg(&cfg).arg("--record").arg(&log).output().unwrap());
    assert!(metrics.contains("tasks_completed"));

    let out = dir.path().join("analysis");
    let stdout = ok(bin()
        .args(["analyze", "--contrast", "high - rest", "--log"])
        .arg(&log)
        .arg("--recording")
        .arg(&rec)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap());
    assert!(stdout.contains("significant channels: [1, 2, 3, 4, 5, 6, 7, 8]"), "{stdout}");
    assert!(out.join("stats.csv").exists() && out.join("probe_map.csv").exists());

    let bad = bin()
        .args(["analyze", "--contrast", "scenario1 - scenario2", "--log"])
        .arg(&log)
        .arg("--recording")
        .arg(&rec)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(!bad.status.success());
    assert!(String::from_utf8_lossy(&bad.stderr).contains("available: high, rest"));

    let replayed = ok(bin().args(["replay", "--speed", "1000000", "--log"]).arg(&log).output().unwrap());
    assert!(replayed.lines().next().unwrap().starts_with(r#"{"type":"state_snapshot""#));

    let zero = bin().args(["replay", "--speed", "0", "--log"]).arg(&log).output().unwrap();
    assert!(!zero.status.success());
}

#[test]
fn synth_writes_a_recording() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("synth.csv");
    ok(bin().arg("synth").arg("--protocol").arg(configs().join("synth_protocol.toml")).arg("--out").arg(&out).output().unwrap());
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 1 + 1200);
}

#[test]
fn bench_prints_one_row_per_density() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("short.toml");
    std::fs::write(&cfg, "duration = 20.0\n").unwrap();
    let csv = ok(bin()
        .args(["bench", "--scenario", "individual", "--density-sweep", "0.5,1.5", "--config"])
        .arg(&cfg)
        .output()
        .unwrap());
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("individual,0.5,"));
}
