use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn slotgame(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_slotgame"))
        .args(args)
        .current_dir(root())
        .env_remove("SLOTGAME_SEED")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn validate_clean_file() {
    let o = slotgame(&["validate", "strategies/four_state.strat"]);
    assert!(o.status.success());
    assert!(stdout(&o).is_empty());
}

#[test]
fn validate_reports_located_errors() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.strat");
    fs::write(
        &path,
        "machine bad\nstart a\nstate a transmit 1.5\n  on T f=1 -> a\n  on T f=2 -> b\nend\n",
    )
    .unwrap();
    let o = slotgame(&["validate", path.to_str().unwrap()]);
    assert!(!o.status.success());
    let text = stdout(&o);
    assert!(text.contains("3:"), "{text}");
    assert!(text.contains("`b`") || text.contains("\"b\""), "{text}");
}

#[test]
fn missing_file_is_an_error() {
    let o = slotgame(&["validate", "strategies/does_not_exist.strat"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("does_not_exist"));
}

#[test]
fn capture_solve_csv() {
    let o = slotgame(&["capture", "solve", "--n-max", "7"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut rows = csv::Reader::from_reader(text.as_bytes());
    let z: Vec<f64> = rows
        .records()
        .map(|r| r.unwrap()[2].parse().unwrap())
        .collect();
    assert_eq!(z.len(), 7);
    assert!((z[2] - 1.78795).abs() < 1e-5);
    assert!((z[6] - 2.27543).abs() < 1e-5);
}

#[test]
fn tournament_writes_matrix_report_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t");
    let o = slotgame(&[
        "tournament",
        "--dir",
        "strategies",
        "--T",
        "50",
        "--runs",
        "200",
        "--seed",
        "7",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv_text = fs::read_to_string(out.join("scores.csv")).unwrap();
    let header = csv_text.lines().next().unwrap();
    assert!(header.starts_with("entrant,always,four_state"));
    assert!(csv_text.contains('±'));
    let merit: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("merit.json")).unwrap()).unwrap();
    assert_eq!(merit["beta_reference"], "never");
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 7);
    assert_eq!(manifest["subcommand"], "tournament");
}

fn seed_in(out: &Path) -> u64 {
    let m: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    m["seed"].as_u64().unwrap()
}

#[test]
fn seed_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("t.toml");
    let strategies = root().join("strategies");
    fs::write(
        &cfg,
        format!(
            "dir = {:?}\nhorizon = 20\nruns = 10\nseed = 5\n",
            strategies.display().to_string()
        ),
    )
    .unwrap();
    let run = |tag: &str, extra: &[&str], env: Option<&str>| {
        let out = dir.path().join(tag);
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_slotgame"));
        cmd.args([
            "tournament",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ])
        .args(extra)
        .env_remove("SLOTGAME_SEED");
        if let Some(v) = env {
            cmd.env("SLOTGAME_SEED", v);
        }
        assert!(cmd.status().unwrap().success());
        seed_in(&out)
    };
    assert_eq!(run("config", &[], None), 5);
    assert_eq!(run("env", &[], Some("11")), 11);
    assert_eq!(run("flag", &["--seed", "13"], Some("11")), 13);
}

#[test]
fn unknown_builtin_and_zero_jobs_fail() {
    let o = slotgame(&["tournament", "--builtin", "five_state"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("five_state"));
    let o = slotgame(&["--jobs", "0", "analytics"]);
    assert!(!o.status.success());
}

#[test]
fn duplicate_entrants_rejected() {
    let o = slotgame(&[
        "tournament",
        "--builtin",
        "never",
        "--builtin",
        "never",
        "--runs",
        "1",
    ]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("duplicate"));
}

#[test]
fn analytics_table() {
    let o = slotgame(&["analytics", "--t-min", "99", "--t-max", "100"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let last = text.lines().last().unwrap();
    assert!(last.starts_with("100,49.5,98,49.66666666666"), "{last}");
    let o = slotgame(&["analytics", "--t-min", "0"]);
    assert!(!o.status.success());
}

#[test]
fn multichannel_outputs() {
    let o = slotgame(&["multichannel", "sweep", "--steps", "5"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 6);
    let o = slotgame(&["multichannel", "simulate", "--users", "4"]);
    assert!(!o.status.success());
}
