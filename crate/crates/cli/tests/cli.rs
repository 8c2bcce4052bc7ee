use std::path::Path;
use std::process::{Command, Output};

fn vitaslam(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vitaslam"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn run_writes_the_documented_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = vitaslam(&[
        "run",
        "--mode",
        "vita",
        "--seed",
        "3",
        "--cycles",
        "40",
        "--out",
        s(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in [
        "report.csv",
        "templates.csv",
        "map.svg",
        "trace.csv",
        "sensor.log",
        "report.json",
    ] {
        assert!(out.join(f).is_file(), "missing {f}");
    }
    let trace = std::fs::read_to_string(out.join("trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 41);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.starts_with("vita: 40 cycles"), "{stdout}");
}

#[test]
fn replay_of_a_recorded_run_reproduces_its_report() {
    let dir = tempfile::tempdir().unwrap();
    let live = dir.path().join("live");
    let again = dir.path().join("again");
    let o = vitaslam(&["run", "--mode", "vita", "--cycles", "60", "--out", s(&live)]);
    assert!(o.status.success());
    let log = live.join("sensor.log");
    let o = vitaslam(&[
        "replay",
        "--log",
        s(&log),
        "--mode",
        "vita",
        "--out",
        s(&again),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["report.json", "trace.csv", "map.svg"] {
        assert_eq!(
            std::fs::read(live.join(f)).unwrap(),
            std::fs::read(again.join(f)).unwrap(),
            "{f} differs"
        );
    }
}

#[test]
fn compare_writes_side_by_side_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cmp");
    let o = vitaslam(&["compare", "--seed", "5", "--cycles", "30", "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let table = std::fs::read_to_string(out.join("report.csv")).unwrap();
    assert!(table.starts_with("metric,visual_only,vita\n"));
    let growth = std::fs::read_to_string(out.join("templates.csv")).unwrap();
    assert_eq!(growth.lines().count(), 31);
    assert!(out.join("visual_only/map.svg").is_file());
    assert!(out.join("vita/map.svg").is_file());
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[visual]\nthreshhold = 0.1\n").unwrap();
    let out = dir.path().join("x");
    let o = vitaslam(&["run", "--config", s(&bad), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("threshhold"));

    std::fs::write(&bad, "[pose_cells]\nglobal_inhibition = -1.0\n").unwrap();
    let o = vitaslam(&["compare", "--config", s(&bad), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(2));

    let o = vitaslam(&["run", "--mode", "tactile_only", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn pipeline_errors_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x");
    let o = vitaslam(&["run", "--cycles", "100000", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(3));

    let log = dir.path().join("broken.log");
    std::fs::write(&log, "{\"format\":\"nope\"}\n").unwrap();
    let o = vitaslam(&[
        "replay",
        "--log",
        s(&log),
        "--mode",
        "vita",
        "--out",
        s(&out),
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 1"));
}

#[test]
fn config_file_overrides_apply() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "[tactile]\nthreshold = 0.5\n").unwrap();
    let out = dir.path().join("o");
    let o = vitaslam(&[
        "run",
        "--config",
        s(&cfg),
        "--cycles",
        "80",
        "--out",
        s(&out),
    ]);
    assert!(o.status.success());
    let loose = std::fs::read_to_string(out.join("report.csv")).unwrap();
    let o = vitaslam(&["run", "--cycles", "80", "--out", s(&out)]);
    assert!(o.status.success());
    let strict = std::fs::read_to_string(out.join("report.csv")).unwrap();
    let tactile = |t: &str| -> usize {
        t.lines()
            .find_map(|l| l.strip_prefix("tactile_templates,"))
            .unwrap()
            .parse()
            .unwrap()
    };
    assert!(tactile(&loose) < tactile(&strict));
}
