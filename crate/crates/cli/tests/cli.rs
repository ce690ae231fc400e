use std::path::Path;
use std::process::{Command, Output};

fn flexbot(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_flexbot"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("spawn flexbot")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn rerun_from_snapshot_is_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let first = flexbot(&["simulate", "--scenario", "turn,free_vibration", "--duration", "0.05", "--jobs", "2", "--out", "a"], d);
    assert_eq!(first.status.code(), Some(0), "{}", String::from_utf8_lossy(&first.stderr));
    for kind in ["turn", "free_vibration"] {
        let run = d.join("a").join(kind);
        assert!(run.join("plots").join("phi.png").is_file());
        let snapshot = run.join("snapshot.cfg");
        let again = flexbot(&["simulate", "--config", snapshot.to_str().unwrap(), "--out", "b", "--no-plots"], d);
        assert_eq!(again.status.code(), Some(0));
        let x = std::fs::read(run.join("trajectory.csv")).unwrap();
        let y = std::fs::read(d.join("b").join(kind).join("trajectory.csv")).unwrap();
        assert!(x == y, "{kind} differs after reload");
        assert_eq!(std::fs::read(&snapshot).unwrap(), std::fs::read(d.join("b").join(kind).join("snapshot.cfg")).unwrap());
    }
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["simulate"],
        vec!["simulate", "--scenario", "sideways", "--out", "o"],
        vec!["spectrum", "--input", "x.csv"],
        vec!["frobnicate"],
    ] {
        assert_eq!(flexbot(&args, dir.path()).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn bad_config_fails_with_one() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.cfg"), "beam_colour = red\n").unwrap();
    let o = flexbot(&["simulate", "--scenario", "turn", "--config", "c.cfg", "--out", "o"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("beam_colour"));
}

#[test]
fn validate_reports_and_honours_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let ok = flexbot(&["validate"], dir.path());
    assert_eq!(ok.status.code(), Some(0), "{}", stdout(&ok));
    assert!(stdout(&ok).contains("0 failed"));

    let strict = flexbot(&["validate", "--tolerance", "oracle_mass=1e-30"], dir.path());
    assert_eq!(strict.status.code(), Some(1));
    let line = stdout(&strict).lines().find(|l| l.contains("oracle_mass")).unwrap().to_string();
    assert!(line.starts_with("[FAIL]") && line.contains("< 1e-30"), "{line}");

    std::fs::write(dir.path().join("bad.cfg"), "base_inertia_y_kg_m2 = -1e-3\n").unwrap();
    let bad = flexbot(&["validate", "--config", "bad.cfg"], dir.path());
    assert_eq!(bad.status.code(), Some(1));
    assert!(stdout(&bad).lines().any(|l| l.starts_with("[FAIL] mass_positive_definite")));
}

#[test]
fn spectrum_finds_a_tone() {
    let dir = tempfile::tempdir().unwrap();
    let mut text = String::from("t,x,y\n");
    for k in 0..4000 {
        let t = k as f64 / 1000.0;
        text.push_str(&format!("{t:?},{:?},0\n", (2.0 * std::f64::consts::PI * 47.3 * t).sin()));
    }
    std::fs::write(dir.path().join("s.csv"), text).unwrap();
    let o = flexbot(&["spectrum", "--input", "s.csv", "--column", "x"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let peaks: Vec<f64> = stdout(&o)
        .lines()
        .skip(2)
        .map(|l| l.split_whitespace().next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(peaks.len(), 1);
    assert!((peaks[0] - 47.3).abs() < 0.025, "{peaks:?}");
    let written = std::fs::read_to_string(dir.path().join("s_x_spectrum.csv")).unwrap();
    assert_eq!(written.lines().count(), 1 + 2001);

    let missing = flexbot(&["spectrum", "--input", "s.csv", "--column", "z"], dir.path());
    assert_eq!(missing.status.code(), Some(1));
}

#[test]
fn divergence_keeps_partial_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let o = flexbot(&["simulate", "--scenario", "step_forward", "--duration", "2.3", "--out", "o", "--no-plots"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("diverged"));
    let csv = std::fs::read_to_string(dir.path().join("o/step_forward/trajectory.csv")).unwrap();
    let last_t: f64 = csv.lines().last().unwrap().split(',').next().unwrap().parse().unwrap();
    assert!(last_t > 2.0 && last_t < 2.3, "{last_t}");
    assert!(dir.path().join("o/step_forward/snapshot.cfg").is_file());
}

#[test]
fn modal_table() {
    let dir = tempfile::tempdir().unwrap();
    let o = flexbot(&["modal", "--out", "m"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let modes = std::fs::read_to_string(dir.path().join("m/modes.csv")).unwrap();
    let first: Vec<&str> = modes.lines().nth(1).unwrap().split(',').collect();
    let beta_l: f64 = first[1].parse().unwrap();
    assert!((beta_l - 1.875104).abs() < 1e-6);
    let integrals = std::fs::read_to_string(dir.path().join("m/integrals.csv")).unwrap();
    assert_eq!(integrals.lines().count(), 1 + 4);
}
