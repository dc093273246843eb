use std::fs;
use std::process::Command;

use fockflow::cli::read_state;

fn fockflow() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_fockflow"));
    c.env("FOCKFLOW_THREADS", "1");
    c
}

#[test]
fn evolve_writes_coherent_state() {
    let dir = tempfile::tempdir().unwrap();
    let gate = dir.path().join("gate.toml");
    fs::write(&gate, "gamma = [[1.0, 0.0]]\n").unwrap();
    let st = fockflow()
        .args(["evolve", "--cutoff", "12", "--gate"])
        .arg(&gate)
        .arg("--out")
        .arg(dir.path())
        .status()
        .unwrap();
    assert!(st.success());
    let psi = read_state(&dir.path().join("evolved.state")).unwrap();
    assert_eq!(psi.cutoff(), 12);
    assert!((psi.amplitudes()[1].re - (-0.5f64).exp()).abs() < 1e-12);
}

#[test]
fn gen_target_to_stdout() {
    let out = fockflow()
        .args(["gen-target", "--spec", "noon:2", "--modes", "2", "--cutoff", "3"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("fock-state v1 modes=2 cutoff=3\n"));
    let psi = fockflow::cli::parse_state(&text).unwrap();
    let a = psi.amplitudes();
    assert!((a[2].norm_sqr() - 0.5).abs() < 1e-15 && (a[6].norm_sqr() - 0.5).abs() < 1e-15);
}

#[test]
fn train_small_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(
        &cfg,
        "task = \"coh\"\nmodes = 1\ncutoff = 10\nlayers = 1\nsteps = 300\nseeds = [1]\nfidelity_floor = 0.99\n\
         [target]\nkind = \"fock\"\nn = 1\n[optimizer]\nlearning_rate = 0.05\n",
    )
    .unwrap();
    let out = fockflow()
        .arg("train")
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    // a single displacement caps |<1|D|0>|^2 at 1/e, so the floor is missed
    assert_eq!(out.status.code(), Some(1));
    let summary = fs::read_to_string(dir.path().join("out/summary.csv")).unwrap();
    let fid: f64 = summary
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .nth(2)
        .unwrap()
        .parse()
        .unwrap();
    assert!(fid > 0.3 && fid < 0.99, "{fid}");
}

#[test]
fn exit_codes_for_bad_input() {
    let st = fockflow().args(["train"]).status().unwrap();
    assert_eq!(st.code(), Some(2));
    let st = fockflow()
        .args(["evolve", "--gate", "/nonexistent.toml"])
        .status()
        .unwrap();
    assert_eq!(st.code(), Some(2));
    let st = fockflow().args(["bench-forward", "--reps", "0"]).status().unwrap();
    assert_eq!(st.code(), Some(2));
    let st = fockflow().arg("--help").output().unwrap();
    assert_eq!(st.status.code(), Some(0));
}

#[test]
fn bench_and_sweep_csv() {
    let out = fockflow()
        .args(["bench-forward", "--cutoffs", "4", "--reps", "3"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("N,method,median_seconds,elements_computed\n4,direct,"));
    assert_eq!(text.lines().count(), 3);

    let out = fockflow()
        .args(["sweep-large-r", "--r-grid", "1,3", "--trials", "2", "--cutoff", "20"])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 5);
}
