use std::path::Path;
use std::process::Command;

fn splx(out: &Path, args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_splx"))
        .args(["--out", out.to_str().unwrap()])
        .args(args)
        .output()
        .expect("binary runs")
}

fn read(dir: &Path, rel: &str) -> Vec<u8> {
    std::fs::read(dir.join(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
}

#[test]
fn simulate_is_deterministic_across_worker_counts() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["--n", "80", "--tau-fin", "0.02", "simulate"];
    let ra = splx(a.path(), &[&["--workers", "1"][..], &args].concat());
    let rb = splx(b.path(), &[&["--workers", "3"][..], &args].concat());
    assert!(ra.status.success(), "{}", String::from_utf8_lossy(&ra.stderr));
    assert!(rb.status.success());
    for rel in ["snapshots/trajectory_n80.jsonl", "logs/transitions_n80.json", "reports/run_n80.json"] {
        assert_eq!(read(a.path(), rel), read(b.path(), rel), "{rel} differs");
    }
}

#[test]
fn sweep_members_match_single_runs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let common = ["--tau-fin", "0.01", "--init", "depinning"];
    assert!(splx(a.path(), &[&common[..], &["sweep", "--sizes", "40,60"]].concat()).status.success());
    assert!(splx(b.path(), &[&common[..], &["--n", "60", "simulate"]].concat()).status.success());
    // headers carry the config hash, which includes the sweep sizes
    let body = |d: &Path| String::from_utf8(read(d, "snapshots/trajectory_n60.jsonl")).unwrap().lines().skip(1).collect::<Vec<_>>().join("\n");
    assert_eq!(body(a.path()), body(b.path()));
}

#[test]
fn verify_passes_on_stationary_data() {
    let d = tempfile::tempdir().unwrap();
    let r = splx(d.path(), &["--init", "stationary", "--n", "50", "verify"]);
    let text = String::from_utf8_lossy(&r.stdout);
    assert!(r.status.success(), "{text}");
    assert!(text.contains("PASS") && !text.contains("FAIL"));
}

#[test]
fn unknown_config_key_fails() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("run.toml");
    std::fs::write(&cfg, "[lattice]\nn = 50\nkapa = 2.0\n").unwrap();
    let r = splx(d.path(), &["--config", cfg.to_str().unwrap(), "simulate"]);
    assert!(!r.status.success());
}
