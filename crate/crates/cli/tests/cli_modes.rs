//! End-to-end checks of the run modes through the public entry point.

use std::fs;
use std::path::Path;

use dmsol_cli::run;

fn write_cfg(dir: &Path, extra: &str) -> std::path::PathBuf {
    let path = dir.join("model.cfg");
    let base = "\
lambda = 1.0
d_av = 0.0
potential.kind = power
potential.gamma = 4.0
psi.kind = uniform_interval
psi.r0 = 0.0
psi.r1 = 1.0
grid.n = 256
grid.length = 30.0
quadrature.nodes = 16
solver.tol = 1e-7
solver.max_iter = 6000
";
    fs::write(&path, format!("{base}{extra}")).unwrap();
    path
}

fn args(parts: &[&str]) -> Vec<String> {
    std::iter::once("dmsol").chain(parts.iter().copied()).map(String::from).collect()
}

#[test]
fn solve_writes_artifacts_and_roundtrips() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), "");
    let out = dir.path().join("run");
    let code = run(args(&["solve", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]));
    assert_eq!(code, 0);
    for f in ["result.txt", "soliton.csv", "trace.csv"] {
        assert!(out.join(f).exists(), "{f} missing");
    }
    let stored = dmsol_core::io::read_result(&out).unwrap();
    assert!(stored.converged);
    assert!(stored.energy < 0.0);
    assert!(stored.multiplier < 2.0 * stored.energy / stored.lambda);
}

#[test]
fn scan_emits_energy_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), "");
    let out = dir.path().join("scan");
    let code = run(args(&[
        "scan",
        "--config",
        cfg.to_str().unwrap(),
        "--lambda",
        "0.5:1.5:0.5",
        "--out",
        out.to_str().unwrap(),
    ]));
    assert_eq!(code, 0);
    let table = fs::read_to_string(out.join("energy_table.csv")).unwrap();
    let mut lines = table.lines();
    assert_eq!(lines.next().unwrap(), "lambda,energy,omega,cap,kappa_star,residual,converged");
    assert_eq!(lines.count(), 3);
}

#[test]
fn verify_mode_passes_on_the_model_problem() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), "");
    let out = dir.path().join("verify");
    let code = run(args(&["verify", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]));
    assert_eq!(code, 0);
    let report = fs::read_to_string(out.join("report.csv")).unwrap();
    assert!(report.lines().count() > 20);
    assert!(!report.contains(",false"));
}

#[test]
fn density_mode_from_profile() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        dir.path(),
        "psi.kind = from_profile\npsi.profile = 1:2,-2:1\n",
    );
    let out = dir.path().join("density");
    let code = run(args(&["density", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]));
    assert_eq!(code, 0);
    let rec = fs::read_to_string(out.join("density.txt")).unwrap();
    assert!(rec.contains("is_probability = true"));
    // psi = 0.5 on [0, 2] for this profile
    assert!(rec.contains("support_lo = 0.0000000000000000e0"));
    assert!(rec.contains("support_hi = 2.0000000000000000e0"));
}

#[test]
fn config_errors_exit_two_and_run_failures_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    // unknown potential kind: config error
    let bad = write_cfg(dir.path(), "potential.kind = cubic_fantasy\n");
    assert_eq!(
        run(args(&["solve", "--config", bad.to_str().unwrap(), "--out", dir.path().join("x").to_str().unwrap()])),
        2
    );
    // gamma = 8 on the zero-dispersion branch violates the exponent range
    let bad2 = write_cfg(dir.path(), "potential.gamma = 8.0\n");
    assert_eq!(
        run(args(&["solve", "--config", bad2.to_str().unwrap(), "--out", dir.path().join("y").to_str().unwrap()])),
        2
    );
    // an honest run that cannot converge in one iteration: run failure
    let slow = write_cfg(dir.path(), "solver.max_iter = 1\nsolver.tol = 1e-14\n");
    assert_eq!(
        run(args(&["solve", "--config", slow.to_str().unwrap(), "--out", dir.path().join("z").to_str().unwrap()])),
        1
    );
}

#[test]
fn identical_config_and_seed_reproduce_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), "solver.restarts = 2\nsolver.init = random_bandlimited\n");
    let (out1, out2) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&out1, &out2] {
        let code = run(args(&[
            "solve",
            "--config",
            cfg.to_str().unwrap(),
            "--seed",
            "42",
            "--out",
            out.to_str().unwrap(),
        ]));
        assert_eq!(code, 0);
    }
    for f in ["result.txt", "soliton.csv", "trace.csv"] {
        let a = fs::read(out1.join(f)).unwrap();
        let b = fs::read(out2.join(f)).unwrap();
        assert_eq!(a, b, "{f} differs between identical runs");
    }
}

#[test]
fn solve_can_restart_from_a_stored_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), "");
    let first = dir.path().join("first");
    assert_eq!(
        run(args(&["solve", "--config", cfg.to_str().unwrap(), "--out", first.to_str().unwrap()])),
        0
    );
    let warm = write_cfg(
        dir.path(),
        &format!("solver.init = file:{}\n", first.join("soliton.csv").display()),
    );
    let second = dir.path().join("second");
    assert_eq!(
        run(args(&["solve", "--config", warm.to_str().unwrap(), "--out", second.to_str().unwrap()])),
        0
    );
    let r = dmsol_core::io::read_result(&second).unwrap();
    // warm start from the minimizer converges almost immediately
    assert!(r.iterations < 12, "iterations = {}", r.iterations);
}
