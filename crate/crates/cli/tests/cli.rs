use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const REPORT_KEYS: [&str; 9] = [
    "config",
    "certificate",
    "bound_sets",
    "estimates",
    "verdicts",
    "withheld",
    "warnings",
    "summary",
    "timing",
];

fn default_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/default.toml")
}

fn markov_up(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_markov-up"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &TempDir, replace: &[(&str, &str)]) -> PathBuf {
    let mut text = std::fs::read_to_string(default_config()).unwrap();
    for (from, to) in replace {
        assert!(text.contains(from), "default config lacks {from:?}");
        text = text.replace(from, to);
    }
    let path = dir.path().join("config.toml");
    std::fs::write(&path, text).unwrap();
    path
}

fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn default_config_passes_with_stable_report_shape() {
    let out = TempDir::new().unwrap();
    let run = markov_up(&[
        "verify",
        default_config().to_str().unwrap(),
        "--out",
        out.path().to_str().unwrap(),
    ]);
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));

    let report = read_json(&out.path().join("report.json"));
    let keys: Vec<&str> = report.as_object().unwrap().keys().map(String::as_str).collect();
    let mut expected = REPORT_KEYS.to_vec();
    expected.sort_unstable();
    let mut sorted = keys.clone();
    sorted.sort_unstable();
    assert_eq!(sorted, expected);
    assert_eq!(report["summary"]["all_pass"], true);
    assert_eq!(report["summary"]["failed"], 0);
    assert!(report["timing"]["wall_clock_ms"].is_null());
    assert!(out.path().join("paths.csv").exists());
    assert!(out.path().join("verdicts.csv").exists());

    let stdout = String::from_utf8_lossy(&run.stdout);
    assert!(stdout.contains("PASS"));
    assert!(!stdout.contains("FAIL"));

    let again = markov_up(&["report", out.path().join("report.json").to_str().unwrap()]);
    assert_eq!(again.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&again.stdout).contains("0 failed"));
}

#[test]
fn invalid_ratio_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let config = write_config(&dir, &[("r = 0.5", "r = 1.0")]);
    let run = markov_up(&["verify", config.to_str().unwrap()]);
    assert_eq!(run.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&run.stderr);
    assert!(stderr.contains("model.r"), "{stderr}");
    assert!(stderr.contains("config.toml:"), "{stderr}");
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(markov_up(&["verify"]).status.code(), Some(1));
    assert_eq!(markov_up(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(markov_up(&["--help"]).status.code(), Some(0));
    let missing = markov_up(&["verify", "/nonexistent/config.toml"]);
    assert_eq!(missing.status.code(), Some(1));
}

#[test]
fn low_sample_runs_warn() {
    let dir = TempDir::new().unwrap();
    let config = write_config(&dir, &[("n_traj = 100000", "n_traj = 10")]);
    let run = markov_up(&[
        "verify",
        config.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(matches!(run.status.code(), Some(0 | 2)));
    assert!(String::from_utf8_lossy(&run.stderr).contains("low-sample"));
    let report = read_json(&dir.path().join("report.json"));
    assert!(report["warnings"][0].as_str().unwrap().contains("low-sample"));
}

#[test]
fn thread_count_does_not_change_report() {
    let dir = TempDir::new().unwrap();
    let config = write_config(&dir, &[("n_traj = 100000", "n_traj = 5000")]);
    let reports: Vec<Vec<u8>> = ["1", "4"]
        .iter()
        .map(|threads| {
            let out = dir.path().join(format!("t{threads}"));
            let run = markov_up(&[
                "verify",
                config.to_str().unwrap(),
                "--threads",
                threads,
                "--out",
                out.to_str().unwrap(),
            ]);
            assert!(matches!(run.status.code(), Some(0 | 2)));
            std::fs::read(out.join("report.json")).unwrap()
        })
        .collect();
    assert_eq!(reports[0], reports[1]);
}

#[test]
fn dumped_trajectories_reproduce_path_summaries() {
    let dir = TempDir::new().unwrap();
    let config = write_config(&dir, &[("n_traj = 100000", "n_traj = 200")]);
    let run = markov_up(&[
        "simulate",
        config.to_str().unwrap(),
        "--dump-trajectories",
        "20",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));

    let mut taus: HashMap<(u64, u64), u64> = HashMap::new();
    let mut paths = csv::Reader::from_path(dir.path().join("paths.csv")).unwrap();
    for row in paths.deserialize::<HashMap<String, String>>() {
        let row = row.unwrap();
        let key = (row["x0"].parse().unwrap(), row["path_id"].parse().unwrap());
        taus.insert(key, row["tau"].parse().unwrap());
    }

    // The last step written for each path is τ, and the state there is the
    // first one at or below the floor.
    let mut last: HashMap<(u64, u64), (u64, u64)> = HashMap::new();
    let mut traj = csv::Reader::from_path(dir.path().join("trajectories.csv")).unwrap();
    for row in traj.deserialize::<(u64, u64, u64, u64)>() {
        let (path_id, x0, step, state) = row.unwrap();
        last.insert((x0, path_id), (step, state));
    }
    assert_eq!(last.len(), 3 * 20);
    for (key, (step, state)) in last {
        assert_eq!(taus[&key], step, "path {key:?}");
        assert!(state <= 5);
    }
}
