use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn qcr(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qcr"))
        .current_dir(dir)
        .env_remove("QCR_THREADS")
        .env_remove("RUST_LOG")
        .args(args)
        .output()
        .expect("spawn qcr")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn gen(dir: &Path, out: &str, n: &str, nc: &str, gamma: &str, rho: &str, seed: &str) {
    let o = qcr(
        dir,
        &["gen", "--n", n, "--nc", nc, "--gamma", gamma, "--rho", rho, "--seed", seed, "--out", out],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
}

#[test]
fn gen_prints_summary_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let args = |out: &'static str| {
        vec!["gen", "--n", "50", "--nc", "30", "--gamma", "0.85", "--rho", "0.25", "--seed", "7", "--out", out]
    };
    let o = qcr(dir.path(), &args("a.txt"));
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let s = stdout(&o);
    assert!(s.contains("n 50\n") && s.contains("n_c 30\n"), "{s}");
    assert!(s.contains("gamma_support ") && s.contains("noise_support "), "{s}");
    assert_eq!(code(&qcr(dir.path(), &args("b.txt"))), 0);
    let a = fs::read(dir.path().join("a.txt")).unwrap();
    let b = fs::read(dir.path().join("b.txt")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn gen_rejects_block_larger_than_graph() {
    let dir = tempfile::tempdir().unwrap();
    let o = qcr(
        dir.path(),
        &["gen", "--nc", "60", "--n", "50", "--gamma", "0.85", "--rho", "0.25", "--out", "x.txt"],
    );
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("n_c = 60"), "{}", stderr(&o));
    assert!(!dir.path().join("x.txt").exists());
}

#[test]
fn gen_reads_config_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("run.cfg"),
        "# instance\nn = 40\nnc = 20\ngamma = 0.9\nrho = 0.1\nseed = 5\nout = cfg.txt\n",
    )
    .unwrap();
    let o = qcr(dir.path(), &["--config", "run.cfg", "gen", "--n", "30"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("n 30\n"));
    let text = fs::read_to_string(dir.path().join("cfg.txt")).unwrap();
    assert!(text.starts_with("30 20 0.9 0.1 5\n"), "{}", &text[..40]);
}

#[test]
fn unknown_config_key_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.cfg"), "n = 40\nnodes = 3\n").unwrap();
    let o = qcr(dir.path(), &["--config", "bad.cfg", "gen", "--out", "y.txt"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("nodes"));
    assert!(!dir.path().join("y.txt").exists());
}

#[test]
fn bad_thread_env_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_qcr"))
        .current_dir(dir.path())
        .env("QCR_THREADS", "lots")
        .args(["norms", "--input", "m.txt"])
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
}

#[test]
fn solve_reports_recovery_and_writes_result() {
    let dir = tempfile::tempdir().unwrap();
    gen(dir.path(), "t.txt", "60", "50", "0.9", "0.1", "3");
    let o = qcr(dir.path(), &["solve", "--input", "t.txt", "--out", "r.json"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let s = stdout(&o);
    assert!(s.contains("verdict recovered"), "{s}");
    let rel: f64 = s
        .lines()
        .find_map(|l| l.strip_prefix("rel_error "))
        .unwrap()
        .parse()
        .unwrap();
    assert!(rel <= 1e-6, "{rel}");
    let json = fs::read_to_string(dir.path().join("r.json")).unwrap();
    assert!(json.contains("\"recovered\": true"));
}

#[test]
fn solve_rejects_zero_lambda() {
    let dir = tempfile::tempdir().unwrap();
    gen(dir.path(), "t.txt", "20", "10", "0.9", "0.1", "1");
    let o = qcr(dir.path(), &["solve", "--input", "t.txt", "--lambda", "0", "--out", "r.json"]);
    assert_eq!(code(&o), 2);
    assert!(!dir.path().join("r.json").exists());
}

#[test]
fn solve_nonconvergence_exits_4_after_writing() {
    let dir = tempfile::tempdir().unwrap();
    gen(dir.path(), "t.txt", "40", "30", "0.85", "0.25", "2");
    let o = qcr(dir.path(), &["solve", "--input", "t.txt", "--max-iters", "2", "--out", "r.json"]);
    assert_eq!(code(&o), 4, "{}", stderr(&o));
    assert!(dir.path().join("r.json").exists());
}

#[test]
fn solve_quasi_clique_reports_feasible_point() {
    let dir = tempfile::tempdir().unwrap();
    gen(dir.path(), "p.txt", "100", "85", "0.85", "0.25", "1");
    let o = qcr(
        dir.path(),
        &["solve", "--input", "p.txt", "--mode", "quasi_clique", "--eta", "85", "--gamma", "0.85"],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let s = stdout(&o);
    let line = s.lines().find(|l| l.starts_with("density")).unwrap();
    let nums: Vec<f64> = line
        .split(|c: char| c == ' ' || c == '[' || c == ']' || c == ',')
        .filter_map(|t| t.parse().ok())
        .collect();
    let (sum, target, lo, hi) = (nums[0], nums[1], nums[2], nums[3]);
    assert!((target - 0.85 * 85.0 * 85.0).abs() < 1e-9);
    assert!(sum >= target - 1e-6, "{line}");
    assert!(lo >= 0.0 && hi <= 1.0, "{line}");
    assert!(s.contains("verdict recovered"), "{s}");
}

#[test]
fn quasi_clique_on_bare_matrix_needs_eta() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("m.txt"), "3\n0 1 1\n1 0 1\n").unwrap();
    let o = qcr(dir.path(), &["solve", "--input", "m.txt", "--mode", "quasi_clique"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn certify_needs_ground_truth() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("m.txt"), "3\n0 1 1\n1 0 1\n").unwrap();
    let o = qcr(dir.path(), &["certify", "--input", "m.txt", "--out", "c.json"]);
    assert_eq!(code(&o), 2);
    assert!(!dir.path().join("c.json").exists());
}

#[test]
fn certify_heavy_noise_fails_with_listing() {
    let dir = tempfile::tempdir().unwrap();
    gen(dir.path(), "h.txt", "100", "85", "0.85", "0.7", "4");
    let o = qcr(dir.path(), &["certify", "--input", "h.txt", "--out", "c.json"]);
    assert_eq!(code(&o), 1, "{}", stderr(&o));
    let s = stdout(&o);
    assert_eq!(s.lines().filter(|l| l.starts_with("||")).count(), 6, "{s}");
    assert!(s.contains("overall false"));
    assert!(stderr(&o).contains("certificate failed:"));
    let json = fs::read_to_string(dir.path().join("c.json")).unwrap();
    assert!(json.contains("\"overall\": false") && !json.contains("\"q_b\""));
}

#[test]
fn grid_with_zero_trials_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let o = qcr(dir.path(), &["grid", "--kind", "size", "--trials", "0", "--out-dir", "g"]);
    assert_eq!(code(&o), 2);
    assert!(!dir.path().join("g").exists());
}

#[test]
fn small_grid_writes_three_files_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let run = |out: &str| {
        let o = qcr(
            dir.path(),
            &["--threads", "2", "grid", "--kind", "size", "--n-max", "25", "--trials", "1", "--out-dir", out],
        );
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    };
    run("g1");
    run("g2");
    for ext in ["csv", "pgm"] {
        let a = fs::read(dir.path().join(format!("g1/size_grid.{ext}"))).unwrap();
        let b = fs::read(dir.path().join(format!("g2/size_grid.{ext}"))).unwrap();
        assert_eq!(a, b, "{ext}");
    }
    let manifest = fs::read_to_string(dir.path().join("g1/size_grid.json")).unwrap();
    assert!(manifest.contains("\"complete\": true"));
}

#[test]
fn norms_prints_all_six() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("m.txt"), "2\n0 0 3\n1 1 -4\n").unwrap();
    let o = qcr(dir.path(), &["norms", "--input", "m.txt"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let vals: Vec<(String, f64)> = stdout(&o)
        .lines()
        .map(|l| {
            let mut it = l.split_whitespace();
            (it.next().unwrap().to_string(), it.next().unwrap().parse().unwrap())
        })
        .collect();
    let expect = [
        ("nuclear", 7.0),
        ("spectral", 4.0),
        ("frobenius", 5.0),
        ("l1", 7.0),
        ("linf", 4.0),
        ("linf2", 4.0),
    ];
    assert_eq!(vals.len(), 6);
    for ((name, v), (en, ev)) in vals.iter().zip(expect) {
        assert_eq!(name, en);
        assert!((v - ev).abs() < 1e-12, "{name} {v}");
    }
}

#[test]
fn missing_input_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = qcr(dir.path(), &["norms", "--input", "nope.txt"]);
    assert_eq!(code(&o), 3);
}
